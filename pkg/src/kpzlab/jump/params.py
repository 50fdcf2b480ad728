"""Parameters of the jump ensemble and the window of admissible epsilon."""

import math
from dataclasses import dataclass
from typing import Optional

from ..errors import ParameterError

_LITTLE_C_RATIO = (3.0 - 2.0 ** 1.5) ** 1.5 * 0.5 * 5.0 ** -1.5


def little_c(k, c=1.0):
    c1 = min(2.0 ** -2.5 * c, 0.125)
    return _LITTLE_C_RATIO ** (k - 1) * c1


def big_d(k, c=1.0):
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    k = max(k, 2)
    first = k ** (1 / 3) * little_c(k, c) ** (-1 / 3) * (2.0 ** -4.5 - 2.0 ** -5) ** (-1 / 3)
    return max(first, 36.0 * (k * k - 1), 2.0)


def big_c(k, C=1.0, c=1.0):
    """Tail constant of curve k: 140C for k = 1, otherwise the E-bar sequence."""
    if k == 1:
        return 140.0 * C
    e = 10.0 * 20.0 ** (k - 1) * 5.0 ** (k / 2) * (10.0 / (3.0 - 2.0 ** 1.5)) ** (k * (k - 1) / 2) * C
    return max(e, math.exp(c / 2))


@dataclass(frozen=True)
class JumpParams:
    """Jump-ensemble parameters.  Only epsilon, k and d are free; T, d_ip and R
    follow from them and the regularity constants (c, C).

    In strict mode any violated epsilon constraint raises; otherwise the
    violations are available from :meth:`violations`.
    """

    epsilon: float
    k: int = 1
    d: float = 1.0
    c: float = 1.0
    C: float = 1.0
    const: float = 1.0
    Ck: Optional[float] = None
    n: Optional[int] = None
    strict: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k}")
        if self.d < 1.0:
            raise ParameterError(f"d must be >= 1, got {self.d}")
        if min(self.c, self.C, self.const) <= 0:
            raise ParameterError("c, C and const must be positive")
        if self.strict and self.violations():
            raise ParameterError("; ".join(self.violations()))

    @property
    def c_k(self):
        return little_c(self.k, self.c)

    @property
    def D_k(self):
        return big_d(self.k, self.c)

    @property
    def C_k(self):
        return self.Ck if self.Ck is not None else big_c(self.k, self.C, self.c)

    @property
    def log_inv_eps(self):
        return -math.log(self.epsilon)

    @property
    def T(self):
        return self.D_k * self.log_inv_eps ** (1 / 3)

    @property
    def d_ip(self):
        return 5.0 * self.d

    @property
    def R(self):
        return 6.0 * math.sqrt(self.d)

    def upper_bounds(self):
        return {
            "e^-1": math.exp(-1.0),
            "17^(-1/k) C_k^(-1/k) / const": 17.0 ** (-1 / self.k) * self.C_k ** (-1 / self.k) / self.const,
            "exp(-24^6 d^6 / D_k^3)": math.exp(-(24.0 ** 6) * self.d ** 6 / self.D_k ** 3),
        }

    def lower_bound(self):
        if self.n is None:
            return 0.0
        return math.exp(-min(self.c / 2, math.sqrt(2.0)) / self.const * self.n ** (1 / 12))

    def violations(self):
        out = [f"epsilon={self.epsilon:g} is not below {name} = {val:.6g}"
               for name, val in self.upper_bounds().items() if not self.epsilon < val]
        lb = self.lower_bound()
        if not self.epsilon >= lb:
            out.append(f"epsilon={self.epsilon:g} is below exp(-(c/2 ^ sqrt2) n^(1/12) / const) = {lb:.6g}")
        return out

    def as_dict(self):
        return {"epsilon": self.epsilon, "k": self.k, "d": self.d, "c": self.c, "C": self.C,
                "const": self.const, "C_k": self.C_k, "c_k": self.c_k, "D_k": self.D_k,
                "T": self.T, "d_ip": self.d_ip, "R": self.R, "violations": self.violations()}

    def pass_rate_bound(self):
        return math.exp(-3973.0 * self.k ** 3.5 * self.d_ip ** 2 * self.D_k ** 2 * self.log_inv_eps ** (2 / 3))

    def log_pass_rate_bound(self):
        return -3973.0 * self.k ** 3.5 * self.d_ip ** 2 * self.D_k ** 2 * self.log_inv_eps ** (2 / 3)
