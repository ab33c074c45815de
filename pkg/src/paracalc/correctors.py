"""Correctors, commutators and their iterates, as literal differences of
paraproduct compositions.

Notation: ``P`` is :func:`~paracalc.paraproducts.para` (Pi), ``M`` is
:func:`~paracalc.paraproducts.modified_para` (tilde-Pi), ``Res`` is the
resonant term and ``f*g`` the dealiased product.

The *flavor* of a corrector selects which paraproduct sits in its first slot:
``plain`` (written with a circle) uses Pi, ``modified`` (bullet) uses tilde-Pi.
Iterates keep the flavor of the corrector they are built from.
"""

from enum import Enum

from .paraproducts import high_part, modified_para, para, para_diff, resonant
from .spectral import derivative, product

__all__ = [
    "Flavor", "corrector_c", "commutator_d", "iterated_d", "corrector_lower",
    "corrector_upper", "mixed_corrector", "swap_r", "swap_r_iter",
    "swap_r_refined", "triple_para_i", "cr", "t_commutator", "t_iter",
    "d_corrector_hat", "d_corrector_hat_iter", "UnsupportedDimensionError",
]


class UnsupportedDimensionError(ValueError):
    pass


class Flavor(Enum):
    PLAIN = "plain"
    MODIFIED = "modified"

    @classmethod
    def parse(cls, x):
        if isinstance(x, cls):
            return x
        aliases = {"plain": cls.PLAIN, "o": cls.PLAIN, "∘": cls.PLAIN, "circ": cls.PLAIN,
                   "modified": cls.MODIFIED, "•": cls.MODIFIED, "bullet": cls.MODIFIED,
                   "*": cls.MODIFIED}
        try:
            return aliases[str(x).lower()]
        except KeyError:
            raise ValueError(f"unknown flavor {x!r}") from None

    def paraproduct(self):
        return para if self is Flavor.PLAIN else modified_para


# -- C and D ------------------------------------------------------------------

def corrector_c(f, g, h, flavor=Flavor.MODIFIED):
    """C(f, g; h) = Res(M_f g, h) - f * Res(g, h)."""
    pp = Flavor.parse(flavor).paraproduct()
    return resonant(pp(f, g), h) - product(f, resonant(g, h))


def commutator_d(f, g, h, flavor=Flavor.MODIFIED):
    """D(f, g; h) = Res(M_f g, h) - P_f Res(g, h)."""
    pp = Flavor.parse(flavor).paraproduct()
    return resonant(pp(f, g), h) - para(f, resonant(g, h))


def iterated_d(mode, x1, x2, x3, x4, flavor=Flavor.MODIFIED):
    """Iterated commutators.

    ``lower`` with arguments (a, b, g, h): D(M_a b, g; h) - P_a D(b, g; h).
    ``upper`` with arguments (f, a, b, h): D(f, M_a b; h) - P_a D(f, b; h).
    """
    pp = Flavor.parse(flavor).paraproduct()
    if mode == "lower":
        a, b, g, h = x1, x2, x3, x4
        return commutator_d(pp(a, b), g, h, flavor) - para(a, commutator_d(b, g, h, flavor))
    if mode == "upper":
        f, a, b, h = x1, x2, x3, x4
        return commutator_d(f, pp(a, b), h, flavor) - para(a, commutator_d(f, b, h, flavor))
    raise ValueError(f"mode must be 'lower' or 'upper', got {mode!r}")


# -- lower / upper iterated correctors -----------------------------------------

def corrector_lower(chain, g, h, flavor=Flavor.MODIFIED):
    """Lower iterated correctors.

    chain [a, b]:    C((a,b), g, h)     = C(M_a b, g, h) - a * C(b, g, h)
    chain [a, b, c]: C(((a,b),c), g, h) = C((M_a b, c), g, h) - a * C((b, c), g, h)
    """
    pp = Flavor.parse(flavor).paraproduct()
    if len(chain) == 2:
        a, b = chain
        return corrector_c(pp(a, b), g, h, flavor) - product(a, corrector_c(b, g, h, flavor))
    if len(chain) == 3:
        a, b, c = chain
        return (corrector_lower([pp(a, b), c], g, h, flavor)
                - product(a, corrector_lower([b, c], g, h, flavor)))
    raise ValueError("chain must have length 2 or 3")


def _upper4(f, a, b, h, flavor):
    pp = Flavor.parse(flavor).paraproduct()
    return corrector_c(f, pp(a, b), h, flavor) - product(a, corrector_c(f, b, h, flavor))


def corrector_upper(f, chain, h, flavor=Flavor.MODIFIED):
    """Upper iterated correctors.

    chain [a, b]:      C(f, (a,b), h)     = C(f, M_a b; h) - a * C(f, b; h)
    chain [a, [b, c]]: C(f, (a,(b,c)), h) = C(f; a, M_b c; h) - b * C(f; a, c; h)
    """
    pp = Flavor.parse(flavor).paraproduct()
    if len(chain) == 2 and not isinstance(chain[1], (list, tuple)):
        a, b = chain
        return _upper4(f, a, b, h, flavor)
    if len(chain) == 2 and len(chain[1]) == 2:
        a, (b, c) = chain
        return _upper4(f, a, pp(b, c), h, flavor) - product(b, _upper4(f, a, c, h, flavor))
    raise ValueError("chain must be [a, b] or [a, [b, c]]")


def mixed_corrector(f, a, b, h, kind="o*"):
    """Mixed-flavor upper correctors.

    ``kind="o*"``: C°(f, M_a b, h) - a * C°(f, b, h) + C°(f, R(1,a,b), h).
    ``kind="*o"``: the roles of Pi and tilde-Pi exchanged, i.e.
    C•(f, P_a b, h) - a * C•(f, b, h) + C•(f, P_a b - M_a b, h).
    """
    if kind in ("o*", "∘•"):
        fl = Flavor.PLAIN
        return (corrector_c(f, modified_para(a, b), h, fl) - product(a, corrector_c(f, b, h, fl))
                + corrector_c(f, para_diff(a, b), h, fl))
    if kind in ("*o", "•∘"):
        fl = Flavor.MODIFIED
        return (corrector_c(f, para(a, b), h, fl) - product(a, corrector_c(f, b, h, fl))
                - corrector_c(f, para_diff(a, b), h, fl))
    raise ValueError(f"unknown mixed kind {kind!r}")


# -- swap operator R and relatives ----------------------------------------------

def swap_r(f, a, g):
    """R(f, a; g) = P_f(M_a g) - P_{f*a} g."""
    return para(f, modified_para(a, g)) - para(product(f, a), g)


def swap_r_iter(f, chain, g):
    """Iterates of R.

    chain [a, b]:    R(f; (a,b); g)     = R(f, M_a b; g) - R(f*a, b; g)
    chain [a, b, c]: R(f; ((a,b),c); g) = R(f; (M_a b, c); g) - R(f*a; (b,c); g)
    """
    if len(chain) == 2:
        a, b = chain
        return swap_r(f, modified_para(a, b), g) - swap_r(product(f, a), b, g)
    if len(chain) == 3:
        a, b, c = chain
        return (swap_r_iter(f, [modified_para(a, b), c], g)
                - swap_r_iter(product(f, a), [b, c], g))
    raise ValueError("chain must have length 2 or 3")


def swap_r_refined(f, chain, g):
    """R(f; chain; g) - P_f R(1; chain; g)."""
    from .spectral import Field
    one = Field.constant(f.grid, 1.0)
    if len(chain) == 1:
        return swap_r(f, chain[0], g) - para(f, swap_r(one, chain[0], g))
    return swap_r_iter(f, chain, g) - para(f, swap_r_iter(one, chain, g))


def triple_para_i(f, a, b, g):
    """I(f, a, b; g) = P_f(M_a(M_b g)) - {P_{fab} g + P_{fa}(M_{Db} g) + P_f(M_{bDa} g)}.

    The inner-difference terms are the R-type differences
    P_{fa}(M_{Db} g) = P_{fa}(M_b g) - P_{fab} g and
    P_f(M_{bDa} g)  = P_f(M_{ab} g) - P_{fa}(M_b g).
    """
    fa = product(f, a)
    ab = product(a, b)
    fab = product(fa, b)
    mbg = modified_para(b, g)
    d_b = para(fa, mbg) - para(fab, g)
    b_d_a = para(f, modified_para(ab, g)) - para(fa, mbg)
    return para(f, modified_para(a, mbg)) - (para(fab, g) + d_b + b_d_a)


def cr(head, a, b, g):
    """CR correctors.

    head f:      CR((f,a,b), g) = Res(R(f,a;b), g) - f * {C•(a,b,g) - C°(a,b,g)}
    head [u, v]: CR(((u,v),a,b), g) = CR((P_u v, a, b), g) - u * CR((v,a,b), g)
    """
    if isinstance(head, (list, tuple)):
        u, v = head
        return cr(para(u, v), a, b, g) - product(u, cr(v, a, b, g))
    f = head
    diff = corrector_c(a, b, g, Flavor.MODIFIED) - corrector_c(a, b, g, Flavor.PLAIN)
    return resonant(swap_r(f, a, b), g) - product(f, diff)


# -- T commutator ---------------------------------------------------------------

def t_commutator(u, g, f):
    """T_u(g, f) = P_u(M_g f) - P_g(P_u f)."""
    return para(u, modified_para(g, f)) - para(g, para(u, f))


def t_iter(u, chain, f):
    """Iterates of T (the 5-linear case extends the 4-linear recursion one level).

    chain [a, b]:    T_u((a,b), f)     = T_u(M_a b, f) - P_a T_u(b, f)
    chain [a, b, c]: T_u(((a,b),c), f) = T_u((M_a b, c), f) - P_a T_u((b,c), f)
    """
    if len(chain) == 2:
        a, b = chain
        return t_commutator(u, modified_para(a, b), f) - para(a, t_commutator(u, b, f))
    if len(chain) == 3:
        a, b, c = chain
        return t_iter(u, [modified_para(a, b), c], f) - para(a, t_iter(u, [b, c], f))
    raise ValueError("chain must have length 2 or 3")


# -- Pi-derivative corrector (one space dimension) ---------------------------------

def _require_1d(*fields):
    for x in fields:
        if x.grid.dim != 1:
            raise UnsupportedDimensionError("the derivative corrector is defined on the circle only")


def d_corrector_hat(f, g, h):
    """C^(f, g, h) = P_{d(P_f g)} h - f * P_{dg} h."""
    _require_1d(f, g, h)
    return para(derivative(para(f, g)), h) - product(f, para(derivative(g), h))


def d_corrector_hat_iter(f, g, pair):
    """C^(f, g, M_u v) - u * C^(f, g, v) for pair = [u, v]."""
    u, v = pair
    _require_1d(f, g, u, v)
    return d_corrector_hat(f, g, modified_para(u, v)) - product(u, d_corrector_hat(f, g, v))


# convenience for the constant-slot checks
pi_one = high_part
