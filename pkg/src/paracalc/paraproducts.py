"""Bony paraproducts, the resonant term and the modified paraproduct.

With blocks ``f_i`` and ``g_j`` (``i, j = -1..J``) the index pairs are split
exactly into ``i <= j-2`` (``para(f, g)``), ``j <= i-2`` (``para(g, f)``) and
``|i-j| <= 1`` (``resonant(f, g)``), so the three parts add up to the
dealiased product to rounding error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .lp import block_spectra
from .spectral import (Field, TimeField, duhamel, inverse_laplacian, laplacian,
                       product)

__all__ = [
    "ProductSplit", "BackendConfig", "para", "resonant", "full_split",
    "modified_para", "para_diff", "high_part", "modified_para_parabolic",
    "semigroup_para", "semigroup_symbols", "calderon_check", "para_with_backend",
]


def _fine_stack(grid, spectra):
    """Padded-grid values for a stack of spectra with leading axis."""
    from .spectral import _pad_axis
    spec = spectra
    for ax in range(grid.dim):
        spec = _pad_axis(spec, ax + 1, grid.n)
    axes = tuple(range(1, grid.dim + 1))
    return np.fft.ifftn(spec, axes=axes).real * (2 * grid.n) ** grid.dim


def _coarse(grid, fine_values):
    return Field.from_spectrum(grid, grid.from_fine(fine_values))


def para(f, g):
    """Pi_f g = sum_{j >= 1} S_{j-2} f * Delta_j g."""
    f.check_grid(g)
    grid = f.grid
    J = grid.J
    low = np.cumsum(block_spectra(f), axis=0)[0:J]       # S_{-1} .. S_{J-2}
    high = block_spectra(g)[2:J + 2]                     # Delta_1 .. Delta_J
    acc = np.sum(_fine_stack(grid, low) * _fine_stack(grid, high), axis=0)
    return _coarse(grid, acc)


def resonant(f, g):
    """Pi(f, g) = sum_{|i-j| <= 1} Delta_i f * Delta_j g."""
    f.check_grid(g)
    grid = f.grid
    fb = block_spectra(f)
    gb = block_spectra(g)
    near = gb.copy()
    near[1:] += gb[:-1]
    near[:-1] += gb[1:]
    acc = np.sum(_fine_stack(grid, fb) * _fine_stack(grid, near), axis=0)
    return _coarse(grid, acc)


@dataclass
class ProductSplit:
    para_fg: Field
    para_gf: Field
    resonant: Field

    def total(self):
        return self.para_fg + self.para_gf + self.resonant


def full_split(f, g):
    return ProductSplit(para(f, g), para(g, f), resonant(f, g))


def high_part(x):
    """Pi_1 x = x - S_0 x (para of the constant 1)."""
    return para(Field.constant(x.grid, 1.0), x)


def modified_para(f, g):
    """Spatial modified paraproduct L^{-1} Pi_f (L g); mean-free output."""
    f.check_grid(g)
    return inverse_laplacian(para(f, laplacian(g)))


def para_diff(a, g):
    """Inner-difference paraproduct Pi_1(tilde-Pi_a g) - Pi_a g.

    This is the swap operator R(1, a; g); it coincides with
    ``modified_para(a, g) - para(a, g)`` up to the block S_0 of the first
    term (identically so for the sharp partition).
    """
    return high_part(modified_para(a, g)) - para(a, g)


def modified_para_parabolic(v, Y):
    """Parabolic modified paraproduct tilde-Pi_v Z for Z = (d/dt + L)^{-1} Y.

    ``v`` is a TimeField; ``Y`` is a Field (time independent) or a TimeField
    on the same time grid.  Computed as the Duhamel integral of
    ``Pi_{v(s)} Y(s)`` with zero initial datum.
    """
    if isinstance(Y, Field):
        src = [para(v.slice(i), Y) for i in range(len(v))]
    else:
        v._check(Y)
        src = [para(v.slice(i), Y.slice(i)) for i in range(len(v))]
    return duhamel(TimeField.from_fields(v.times, src))


# -- semigroup backend ------------------------------------------------------

@dataclass(frozen=True)
class BackendConfig:
    backend: str = "lp"
    b: int = 2
    levels: int = 16
    substeps: int = 3

    def __post_init__(self):
        if self.backend not in ("lp", "semigroup"):
            raise ValueError(f"unknown paraproduct backend {self.backend!r}")
        if int(self.b) != self.b or self.b < 2:
            raise ValueError("semigroup order b must be an integer >= 2")
        if int(self.levels) != self.levels or self.levels < 8:
            raise ValueError("quadrature levels must be an integer >= 8")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be a positive integer")


def _quadrature_nodes(levels, substeps=1):
    """Quadrature for int_{2^-levels}^1 F(t) dt/t on dyadic levels.

    Each level [2^-(l+1), 2^-l] carries ``substeps`` Gauss-Legendre nodes in
    the variable log t (one node is the geometric midpoint with weight ln 2).
    Returns (nodes, weights).
    """
    x, w = np.polynomial.legendre.leggauss(substeps)
    ell = np.arange(levels)[:, None]
    s = ell + (1.0 - x[None, :]) / 2.0          # log2(1/t) inside [l, l+1]
    weights = np.broadcast_to(w[None, :] * math.log(2.0) / 2.0, s.shape)
    return 2.0 ** (-s.ravel()), weights.ravel()


def semigroup_symbols(lam, t, b):
    """Symbols (Q, P) at time t: Q = (tL)^b e^{-tL/2}/sqrt((2b-1)!) and
    P = sum_{m<b} (tL)^m/m! e^{-tL}.

    The square of Q is (tL)^{2b} e^{-tL}/(2b-1)!, whose dt/t integral over
    (0, 1] is 1 - P^{(2b)}_1.
    """
    x = t * lam
    q = x ** b * np.exp(-x / 2) / math.sqrt(math.factorial(2 * b - 1))
    p = sum(x ** m / math.factorial(m) for m in range(b)) * np.exp(-x)
    return q, p


def semigroup_para(f, g, cfg=BackendConfig(backend="semigroup")):
    """One-term semigroup paraproduct int_0^1 Q_t(Q_t g * P_t f) dt/t.

    ``f`` is the low-frequency (modulating) slot, ``g`` the high-frequency
    slot, as in :func:`para`.
    """
    f.check_grid(g)
    grid = f.grid
    lam = grid.k2
    nodes, w = _quadrature_nodes(cfg.levels, cfg.substeps)
    acc = np.zeros(grid.shape, dtype=complex)
    for t, wt in zip(nodes, w):
        q, p = semigroup_symbols(lam, t, cfg.b)
        prod = grid.from_fine(grid.to_fine(q * g.spectrum) * grid.to_fine(p * f.spectrum))
        acc += wt * q * prod
    return Field.from_spectrum(grid, acc)


def calderon_check(g, cfg=BackendConfig(backend="semigroup")):
    """Relative sup error of the quadrature of int_0^1 Q_t Q_t g dt/t
    against its closed form g - P^{(2b)}_1 g."""
    lam = g.grid.k2
    nodes, w = _quadrature_nodes(cfg.levels, cfg.substeps)
    quad = sum(wt * semigroup_symbols(lam, t, cfg.b)[0] ** 2 for t, wt in zip(nodes, w))
    _, p1 = semigroup_symbols(lam, 1.0, 2 * cfg.b)
    approx = Field.from_spectrum(g.grid, quad * g.spectrum)
    exact = Field.from_spectrum(g.grid, (1.0 - p1) * g.spectrum)
    scale = exact.sup()
    return (approx - exact).sup() / scale if scale > 0 else 0.0


def para_with_backend(f, g, cfg):
    if cfg.backend == "semigroup":
        return semigroup_para(f, g, cfg)
    return para(f, g)


# re-exported for convenience
dealiased_product = product
