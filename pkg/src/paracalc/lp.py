"""Littlewood-Paley blocks, partial sums and reconstruction.

Blocks are indexed ``j = -1, 0, ..., J`` with ``J = m - 1`` for ``n = 2**m``.

Two partitions of unity are available:

``sharp``
    block -1 is ``|k| < 1``, block j is ``2**j <= |k| < 2**(j+1)``.
``smooth``
    built from a C-infinity radial profile ``chi`` equal to 1 on ``[0, 3/4]``
    and 0 beyond ``4/3``:  block -1 is ``chi(|k|)``, block j is
    ``chi(|k|/2**(j+1)) - chi(|k|/2**j)`` and the top block collects the
    rest, ``1 - chi(|k|/2**J)``.  Block j is supported in
    ``[3/4 * 2**j, 8/3 * 2**j]``.
"""

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import Field, GridMismatchError, TorusGrid

__all__ = [
    "PartitionScheme", "DyadicDecomposition", "block", "partial_sum",
    "decompose", "reconstruct", "block_symbols", "block_spectra",
    "block_sup_norms", "smooth_profile", "write_decomposition_csv",
]


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def smooth_profile(r):
    """Radial bump: 1 for r <= 3/4, 0 for r >= 4/3, smooth in between."""
    return 1.0 - _smooth_step((np.asarray(r, dtype=float) - 0.75) / (4.0 / 3.0 - 0.75))


@dataclass(frozen=True)
class PartitionScheme:
    kind: str = "smooth"

    def __post_init__(self):
        if self.kind not in ("smooth", "sharp"):
            raise ValueError(f"unknown partition kind {self.kind!r}")

    def symbols(self, grid):
        """Array of shape (J+2, *grid.shape); entry j+1 is the symbol of block j."""
        return _symbols(self.kind, grid.dim, grid.n)

    def annulus(self, j):
        """Nominal radial support of block j (closed interval)."""
        if j < 0:
            return (0.0, 1.0) if self.kind == "sharp" else (0.0, 4.0 / 3.0)
        if self.kind == "sharp":
            return (2.0 ** j, 2.0 ** (j + 1))
        return (0.75 * 2.0 ** j, 8.0 / 3.0 * 2.0 ** j)


@lru_cache(maxsize=32)
def _symbols(kind, dim, n):
    grid = TorusGrid(dim, n)
    r = grid.kabs
    J = grid.J
    out = np.empty((J + 2,) + grid.shape)
    if kind == "sharp":
        out[0] = r < 1
        for j in range(J + 1):
            out[j + 1] = (r >= 2.0 ** j) & (r < 2.0 ** (j + 1))
        out[J + 1] = r >= 2.0 ** J
    else:
        out[0] = smooth_profile(r)
        for j in range(J):
            out[j + 1] = smooth_profile(r / 2.0 ** (j + 1)) - smooth_profile(r / 2.0 ** j)
        out[J + 1] = 1.0 - smooth_profile(r / 2.0 ** J)
    err = np.max(np.abs(out.sum(axis=0) - 1.0))
    if err > 1e-14:
        raise RuntimeError(f"partition of unity violated ({err:.2e})")
    out.setflags(write=False)
    return out


def block_symbols(grid):
    return PartitionScheme(grid.partition).symbols(grid)


def _check_index(grid, j):
    if not (-1 <= j <= grid.J):
        raise IndexError(f"block index {j} outside [-1, {grid.J}]")


def block_spectra(f):
    """Spectra of all blocks of ``f``, shape (J+2, *shape)."""
    return block_symbols(f.grid) * f.spectrum


def block(f, j):
    _check_index(f.grid, j)
    return Field.from_spectrum(f.grid, block_symbols(f.grid)[j + 1] * f.spectrum)


def partial_sum(f, j):
    """S_j f = sum of blocks i <= j."""
    _check_index(f.grid, j)
    sym = block_symbols(f.grid)[: j + 2].sum(axis=0)
    return Field.from_spectrum(f.grid, sym * f.spectrum)


def block_sup_norms(f):
    """Sup norms of blocks j = -1..J, as an array of length J+2."""
    grid = f.grid
    vals = np.fft.ifftn(block_spectra(f), axes=tuple(range(1, grid.dim + 1))).real * grid.size
    return np.max(np.abs(vals.reshape(vals.shape[0], -1)), axis=1)


@dataclass
class DyadicDecomposition:
    grid: TorusGrid
    blocks: list
    block_sup_norms: np.ndarray
    partition: PartitionScheme

    @property
    def indices(self):
        return list(range(-1, self.grid.J + 1))


def decompose(f):
    spectra = block_spectra(f)
    blocks = [Field.from_spectrum(f.grid, s) for s in spectra]
    norms = np.array([b.sup() for b in blocks])
    return DyadicDecomposition(f.grid, blocks, norms, PartitionScheme(f.grid.partition))


def reconstruct(d):
    grid = d.grid
    for b in d.blocks:
        if b.grid != grid:
            raise GridMismatchError("decomposition blocks live on different grids")
    if len(d.blocks) != grid.J + 2:
        raise GridMismatchError("decomposition has the wrong number of blocks")
    total = np.sum([b.values for b in d.blocks], axis=0)
    return Field(grid, total)


def write_decomposition_csv(d, path):
    """CSV with columns j, sup_norm, log2_sup_norm."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "sup_norm", "log2_sup_norm"])
        for j, s in zip(d.indices, d.block_sup_norms):
            w.writerow([j, repr(float(s)), repr(float(np.log2(s))) if s > 0 else "-inf"])
