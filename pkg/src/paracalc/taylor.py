"""Paralinearization and the higher-order paracontrolled Taylor expansion.

For ``k`` in {1, 2, 3} the expansion reads

    f(u) = sum_{n=1}^{k} (1/n!) sum_{j=0}^{n} (-1)^j C(n, j) P_{u^j f^(n)(u)} (u^{n-j}) + f(u)#

where ``P`` is the paraproduct (plain or modified flavor) and the remainder
``f(u)#`` is *defined* as the difference, so the identity holds to rounding.
Pointwise maps and powers are evaluated on the dealiased grid, which makes the
expansion of a polynomial of degree at most ``k`` exact up to low blocks.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .correctors import Flavor
from .holder import besov_norm, estimate_exponent
from .spectral import apply_pointwise

__all__ = ["Nonlinearity", "TaylorTerm", "TaylorExpansion", "paralinearize",
           "taylor_expand", "taylor_lipschitz_probe", "MAX_ORDER"]

MAX_ORDER = 3


@dataclass(frozen=True)
class Nonlinearity:
    """A real map with its first four derivatives (vectorised callables)."""

    label: str
    derivs: tuple  # (f, f', f'', f''', f'''')

    def __post_init__(self):
        if len(self.derivs) != 5:
            raise ValueError("a Nonlinearity needs f and four derivatives")

    def __call__(self, x):
        return self.derivs[0](x)

    def derivative(self, k):
        return self.derivs[k]

    def check_consistency(self, lo=-2.0, hi=2.0, h=1e-4, tol=1e-5):
        """Max mismatch between centered differences of f^(k) and f^(k+1)."""
        x = np.linspace(lo, hi, 101)
        worst = 0.0
        for k in range(4):
            fd = (self.derivs[k](x + h) - self.derivs[k](x - h)) / (2 * h)
            scale = 1.0 + np.max(np.abs(self.derivs[k + 1](x)))
            worst = max(worst, float(np.max(np.abs(fd - self.derivs[k + 1](x))) / scale))
        if worst > tol:
            raise ValueError(f"derivatives of {self.label} are inconsistent (mismatch {worst:.2e})")
        return worst

    # -- built-in maps -----------------------------------------------------

    @classmethod
    def sin(cls):
        return cls("sin", (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin))

    @classmethod
    def cos(cls):
        return cls("cos", (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin, np.cos))

    @classmethod
    def tanh(cls):
        def s(x):
            return 1.0 / np.cosh(x) ** 2
        return cls("tanh", (
            np.tanh, s,
            lambda x: -2 * s(x) * np.tanh(x),
            lambda x: 4 * s(x) * np.tanh(x) ** 2 - 2 * s(x) ** 2,
            lambda x: -8 * s(x) * np.tanh(x) ** 3 + 16 * s(x) ** 2 * np.tanh(x)))

    @classmethod
    def polynomial(cls, coeffs, label=None):
        """sum_i coeffs[i] x^i."""
        p = np.polynomial.Polynomial(coeffs)
        ders = [p] + [p.deriv(k) for k in range(1, 5)]
        fns = tuple((lambda q: lambda x: q(x) + 0.0 * x)(q) for q in ders)
        return cls(label or f"poly{list(coeffs)}", fns)

    @classmethod
    def identity(cls):
        return cls.polynomial([0.0, 1.0], "identity")

    @classmethod
    def constant(cls, c):
        return cls.polynomial([float(c)], f"constant({c})")

    @classmethod
    def monomial(cls, d):
        return cls.polynomial([0.0] * d + [1.0], f"x^{d}")

    @classmethod
    def by_name(cls, name):
        table = {"sin": cls.sin, "cos": cls.cos, "tanh": cls.tanh, "identity": cls.identity,
                 "square": lambda: cls.monomial(2), "cube": lambda: cls.monomial(3),
                 "one": lambda: cls.constant(1.0)}
        if name.startswith("constant:"):
            return cls.constant(float(name.split(":", 1)[1]))
        try:
            return table[name]()
        except KeyError:
            raise ValueError(f"unknown nonlinearity {name!r}; known: "
                             f"{', '.join(table)}, constant:<c>") from None


@dataclass
class TaylorTerm:
    n: int
    j: int
    weight: float
    coefficient: object   # field u^j f^(n)(u)
    power: int            # n - j
    argument: object      # field u^(n-j)
    value: object         # weight * P_coefficient(argument)


@dataclass
class TaylorExpansion:
    order: int
    flavor: Flavor
    fu: object
    terms: list = field(default_factory=list)
    remainder: object = None

    def paraproduct_sum(self):
        total = self.fu * 0.0
        for t in self.terms:
            total = total + t.value
        return total

    def identity_error(self):
        """Relative sup mismatch of terms + remainder against f(u)."""
        diff = (self.paraproduct_sum() + self.remainder - self.fu).sup()
        return diff / max(self.fu.sup(), np.finfo(float).tiny)

    def remainder_exponent(self, window=None):
        return estimate_exponent(self.remainder, window)


def _expand(fn, u, order, flavor):
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3 (got {order})")
    flavor = Flavor.parse(flavor)
    pp = flavor.paraproduct()
    fu = apply_pointwise(fn.derivative(0), u)
    terms = []
    powers = {}
    for n in range(1, order + 1):
        fn_n = fn.derivative(n)
        for j in range(n):   # the j = n term pairs with u^0 = 1, whose paraproduct vanishes
            weight = (-1) ** j * math.comb(n, j) / math.factorial(n)
            coef = apply_pointwise(lambda x, j=j, g=fn_n: x ** j * g(x), u)
            p = n - j
            if p not in powers:
                powers[p] = apply_pointwise(lambda x, p=p: x ** p, u)
            terms.append(TaylorTerm(n, j, weight, coef, p, powers[p],
                                    pp(coef, powers[p]) * weight))
    exp = TaylorExpansion(order, flavor, fu, terms)
    exp.remainder = fu - exp.paraproduct_sum()
    return exp


def paralinearize(fn, u, flavor=Flavor.PLAIN):
    """f(u) = P_{f'(u)} u + f(u)#."""
    return _expand(fn, u, 1, flavor)


def taylor_expand(fn, u, order, flavor=Flavor.PLAIN):
    return _expand(fn, u, order, flavor)


def taylor_lipschitz_probe(fn, u, v, order, alpha=0.5, flavor=Flavor.PLAIN):
    """||f(u)# - f(v)#||_{(order+1) alpha} / ||u - v||_alpha (0 when u = v)."""
    u.check_grid(v)
    du = besov_norm(u - v, alpha).norm
    if du == 0.0:
        return 0.0
    ru = taylor_expand(fn, u, order, flavor).remainder
    rv = taylor_expand(fn, v, order, flavor).remainder
    return besov_norm(ru - rv, (order + 1) * alpha).norm / du
