"""Exact finite-length average weight enumerator of the regular (l, r) ensemble.

For n variable nodes and m = n*l/r checks, the expected number of codewords
of Hamming weight W is

    E[A_n(W)] = C(n, W) * coeff[q(x)**m, x**(l*W)] / C(n*l, l*W),
    q(x) = ((1 + x)**r + (1 - x)**r) / 2,

where q(x) enumerates the even-weight socket patterns of one check.  All
arithmetic is on Python integers; the result is an exact ``Fraction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache

from .errors import InvalidWeight
from .scalar import EnsembleParams


@dataclass(frozen=True)
class FiniteEnsemble:
    params: EnsembleParams
    n: int

    def __post_init__(self):
        if self.n < 1 or (self.n * self.params.l) % self.params.r:
            raise ValueError(f"n*l must be divisible by r (n={self.n}, {self.params})")

    @property
    def m(self) -> int:
        return self.n * self.params.l // self.params.r


@dataclass(frozen=True)
class ExactCount:
    W: int
    value: Fraction

    def decimal(self, digits=15) -> str:
        """Correctly rounded decimal string with ``digits`` significant digits."""
        if self.value == 0:
            return "0"
        with localcontext() as ctx:
            ctx.prec = digits
            q = Decimal(self.value.numerator) / Decimal(self.value.denominator)
        return f"{q:g}" if abs(q.adjusted()) < digits else str(q)


def log_fraction(fr: Fraction) -> float:
    if fr <= 0:
        return -math.inf
    return math.log(fr.numerator) - math.log(fr.denominator)


def check_polynomial(r: int) -> list[int]:
    """Coefficients of ((1+x)^r + (1-x)^r)/2: the even binomials."""
    return [math.comb(r, k) if k % 2 == 0 else 0 for k in range(r + 1)]


def _pack(coeffs, bits):
    out = 0
    for c in reversed(coeffs):
        out = (out << bits) | c
    return out


def _unpack(value, bits, count):
    mask = (1 << bits) - 1
    out = []
    for _ in range(count):
        out.append(value & mask)
        value >>= bits
    return out


def truncated_power(coeffs, power, degree, bits):
    """Coefficients up to ``degree`` of ``poly**power`` (non-negative integer coefficients).

    Repeated squaring; each product is one big-integer multiplication of
    Kronecker-packed coefficient vectors, ``bits`` wide per slot.  Slots must
    be wide enough for every coefficient of every partial power.
    """
    base = list(coeffs[: degree + 1])
    result = [1]
    while power:
        if power & 1:
            result = _unpack(_pack(result, bits) * _pack(base, bits), bits, degree + 1)
        power >>= 1
        if power:
            base = _unpack(_pack(base, bits) ** 2, bits, degree + 1)
    return result + [0] * (degree + 1 - len(result))


@lru_cache(maxsize=256)
def _coefficient(r: int, m: int, degree: int) -> int:
    q = check_polynomial(r)
    # coefficients of q**k are bounded by q(1)**k = 2**((r-1)k)
    bits = (r - 1) * m + 2
    return truncated_power(q, m, degree, bits)[degree]


def exact_average_enumerator(fe: FiniteEnsemble, W: int) -> ExactCount:
    n, l = fe.n, fe.params.l
    if not (isinstance(W, int) and 0 <= W <= n):
        raise InvalidWeight(f"weight must be an integer in [0, {n}], got {W!r}")
    coeff = _coefficient(fe.params.r, fe.m, l * W)
    value = Fraction(math.comb(n, W) * coeff, math.comb(n * l, l * W))
    return ExactCount(W, value)


def weight_for(fe: FiniteEnsemble, omega: float, admissible=True) -> int:
    """Weight nearest to ``n(1 - omega)/2``, ties to even.

    With ``admissible`` and odd ``l``, only even weights are considered,
    because ``l*W`` odd makes every check parity fail and the count vanish.
    """
    target = fe.n * (1.0 - omega) / 2.0
    if admissible and fe.params.l % 2 == 1:
        W = 2 * round(target / 2.0)
    else:
        W = round(target)
    return min(max(int(W), 0), fe.n)


def combinatorial_growth(fe: FiniteEnsemble, omega: float, admissible=True) -> tuple[float, float]:
    """``(omega_achieved, (1/n) ln E[A_n(W)])``; the rate is ``-inf`` when the count is 0."""
    W = weight_for(fe, omega, admissible)
    count = exact_average_enumerator(fe, W)
    return 1.0 - 2.0 * W / fe.n, log_fraction(count.value) / fe.n
