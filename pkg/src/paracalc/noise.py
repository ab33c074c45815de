"""Random fields of prescribed regularity and the enhanced noise of gPAM.

Sampling laws
-------------
``gaussian-spectral``
    ``g_hat(k) = xi_k (1+|k|^2)^{-(alpha+d/2)/2}`` with complex Gaussian
    ``xi_k`` (conjugate symmetric), mean set to zero.  Its dyadic block sup
    norms decay like ``2^{-j alpha} sqrt(j)``, so a regression over a finite
    window reads an exponent about 0.1 below ``alpha``.
``gaussian-holder`` (default)
    the same law with the extra factor ``(1 + log2(1+|k|))^{-1/2}``, which
    removes the ``sqrt(j)`` growth of Gaussian block maxima; samples measure
    at ``alpha`` to within a few hundredths.

The generator is numpy's counter-based Philox bit generator keyed by the
64-bit seed, so samples are reproducible across platforms.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .correctors import corrector_c, t_commutator
from .paraproducts import para, para_diff, resonant
from .spectral import Field, TimeField, duhamel, heat_propagate, save_field

__all__ = [
    "NoiseSpec", "LAWS", "sample_field", "mollify", "build_z1", "EnhancedNoise",
    "build_enhancement", "zeta3_components", "save_enhancement",
]

LAWS = ("gaussian-holder", "gaussian-spectral")


@dataclass(frozen=True)
class NoiseSpec:
    target_alpha: float
    seed: int = 0
    law: str = "gaussian-holder"

    def __post_init__(self):
        if not -2.0 < self.target_alpha < 1.5:
            raise ValueError(f"target_alpha {self.target_alpha} outside (-2, 1.5)")
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}; expected one of {LAWS}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def sample_field(spec, grid):
    """Draw a mean-zero Gaussian field with the law described by ``spec``."""
    rng = np.random.Generator(np.random.Philox(int(spec.seed)))
    white = rng.standard_normal(grid.shape)
    # fft of real white noise: conjugate symmetric, E|xi_k|^2 = 1 after scaling
    xi = np.fft.fftn(white) / np.sqrt(grid.size)
    weight = (1.0 + grid.k2) ** (-(spec.target_alpha + grid.dim / 2.0) / 2.0)
    if spec.law == "gaussian-holder":
        weight = weight / np.sqrt(1.0 + np.log2(1.0 + grid.kabs))
    spec_out = xi * weight
    spec_out.flat[0] = 0.0
    return Field.from_spectrum(grid, spec_out)


def mollify(f, eps):
    if eps <= 0:
        raise ValueError("mollification scale must be positive")
    return heat_propagate(f, eps)


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("empty time grid")
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must start at 0 and be strictly increasing")
    return times


def build_z1(zeta, times):
    """Z_1 = (d/dt + L)^{-1} zeta with zero initial datum, in closed form:
    Z_1(t) = L^{-1}(I - e^{-tL})(zeta - mean) + t * mean."""
    times = _check_times(times)
    k2 = zeta.grid.k2
    axes = tuple(range(1, zeta.grid.dim + 1))
    specs = np.empty((times.size,) + zeta.grid.shape, dtype=complex)
    for i, t in enumerate(times):
        z = t * k2
        with np.errstate(invalid="ignore", divide="ignore"):
            sym = np.where(z > 0, -np.expm1(-z) / np.where(k2 > 0, k2, 1.0), t)
        specs[i] = sym * zeta.spectrum
    vals = np.fft.ifftn(specs, axes=axes).real * zeta.grid.size
    return TimeField(zeta.grid, times, vals)


def zeta3_components(zeta, z1, z2):
    """The eight third-order components at one time slice (list of Fields)."""
    rz = resonant(z1, z1)
    return [
        resonant(z2, zeta),                 # Pi(Z2, zeta)
        corrector_c(z1, z1, zeta),          # C(Z1, Z1, zeta)
        resonant(rz, zeta),                 # Pi(Pi(Z1, Z1), zeta)
        resonant(z1, resonant(z1, zeta)),   # Pi(Z1, Pi(Z1, zeta))
        t_commutator(zeta, z1, z1),         # T_zeta(Z1, Z1)
        para(zeta, para_diff(z1, z1)),      # Pi_zeta(Pi_{D Z1} Z1)
        para(zeta, z2),                     # Pi_zeta Z2
        para(zeta, rz),                     # Pi_zeta Pi(Z1, Z1)
    ]


@dataclass
class EnhancedNoise:
    zeta: Field
    times: np.ndarray
    Z1: TimeField
    zeta2_1: TimeField
    zeta2_2: TimeField
    Y2: TimeField
    Z2: TimeField
    zeta3: list = field(default_factory=list)   # components at the final slice
    meta: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.zeta.grid

    def zeta3_at(self, i):
        return zeta3_components(self.zeta, self.Z1.slice(i), self.Z2.slice(i))


def build_enhancement(zeta, times, meta=None):
    times = _check_times(times)
    z1 = build_z1(zeta, times)
    z1s = z1.slices()
    r = TimeField.from_fields(times, [resonant(s, zeta) for s in z1s])
    p = TimeField.from_fields(times, [para(zeta, s) for s in z1s])
    y2 = r + p
    z2 = duhamel(y2)
    xi = EnhancedNoise(zeta, times, z1, r, p, y2, z2, meta=dict(meta or {}))
    xi.zeta3 = xi.zeta3_at(len(times) - 1)
    return xi


def save_enhancement(xi, directory):
    """Write the components as PCF1 files plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    save_field(os.path.join(directory, "zeta.pcf"), xi.zeta)
    last = len(xi.times) - 1
    names = {"Z1": xi.Z1.slice(last), "Y2": xi.Y2.slice(last), "Z2": xi.Z2.slice(last),
             "zeta2_1": xi.zeta2_1.slice(last), "zeta2_2": xi.zeta2_2.slice(last)}
    for k, c in enumerate(xi.zeta3, 1):
        names[f"zeta3_{k}"] = c
    for name, f in names.items():
        save_field(os.path.join(directory, f"{name}.pcf"), f)
    manifest = dict(xi.meta)
    manifest.update({"timegrid": [float(t) for t in xi.times], "slice": "final",
                     "files": sorted(["zeta"] + list(names))})
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
