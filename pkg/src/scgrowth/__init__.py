"""Growth rates and thresholds of regular and spatially coupled LDPC ensembles."""
