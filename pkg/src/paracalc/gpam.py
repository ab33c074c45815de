"""Second-order paracontrolled fixed point for (d/dt + L) u = f(u) zeta.

The unknown is the tuple ``uhat = (u; u1, u2; u11)``.  One application of the
map ``Phi`` returns ``(v; f(u), f'(u) u1; f'(u) u1)`` where ``v`` solves
``(d/dt + L) v = f(u) zeta`` with ``v(0) = u0``.  With mollified noise the
product ``f(u) zeta`` is an ordinary (dealiased) product, and the paracontrolled
structure is checked after the fact: the remainders

    u#  = u  - M_{u1} Z1 - M_{u2} Z2,
    u1# = u1 - M_{u11} Z1,

(``M`` the parabolic modified paraproduct) are measured to be smoother than
``u``, and a classical exponential integrator serves as an independent oracle.
"""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .correctors import corrector_c
from .holder import ensemble_fit, fit_exponent
from .lp import block_sup_norms
from .noise import NoiseSpec, build_enhancement, mollify, sample_field
from .paraproducts import modified_para_parabolic, para, resonant
from .spectral import (Field, InvalidFieldError, TimeField, apply_pointwise, duhamel,
                       save_field)

__all__ = [
    "SolveOptions", "ParacontrolledFunction", "DivergenceError", "NonConvergenceError",
    "initial_iterate", "phi_map", "solve_gpam", "reference_solve", "AnsatzReport",
    "ansatz_residual", "pointwise_bound_check", "schauder_check", "product_residual",
    "make_noise", "save_solution",
]

BLOWUP = 1e12


class DivergenceError(RuntimeError):
    def __init__(self, iteration, message="iteration diverged"):
        self.iteration = iteration
        super().__init__(f"{message} at iteration {iteration}")


class NonConvergenceError(RuntimeError):
    def __init__(self, history):
        self.history = list(history)
        super().__init__(f"no convergence after {len(history)} iterations "
                         f"(last residual {history[-1]:.3e})")


@dataclass(frozen=True)
class SolveOptions:
    T: float = 0.25
    steps: int = 128
    max_iters: int = 50
    fp_tol: float = 1e-8
    alpha: float = 0.6
    beta: float = 0.55

    def __post_init__(self):
        if not self.T > 0 or int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("need T > 0 and a positive integer number of steps")
        if not self.fp_tol > 0 or self.max_iters < 1:
            raise ValueError("need fp_tol > 0 and max_iters >= 1")
        a, b = self.alpha, self.beta
        if not (0.5 < b < a <= 2.0 / 3.0):
            raise ValueError(f"exponents must satisfy 1/2 < beta < alpha <= 2/3 (got {a}, {b})")
        if not 3 * a + b > 2:
            raise ValueError(f"exponents must satisfy 3 alpha + beta > 2 (got {3 * a + b:.3f})")

    @property
    def dt(self):
        return self.T / self.steps

    def timegrid(self):
        return np.linspace(0.0, self.T, self.steps + 1)


@dataclass
class ParacontrolledFunction:
    u: TimeField
    u1: TimeField
    u2: TimeField
    u11: TimeField
    history: list = field(default_factory=list)

    @property
    def grid(self):
        return self.u.grid

    @property
    def times(self):
        return self.u.times

    def components(self):
        return (self.u, self.u1, self.u2, self.u11)

    def distance(self, other):
        return max((a - b).sup() for a, b in zip(self.components(), other.components()))

    def remainders(self, xi):
        """(u#, u1#) as TimeFields."""
        u_sharp = (self.u - modified_para_parabolic(self.u1, xi.zeta)
                   - modified_para_parabolic(self.u2, xi.Y2))
        u1_sharp = self.u1 - modified_para_parabolic(self.u11, xi.zeta)
        return u_sharp, u1_sharp


def _pointwise_series(func, *series):
    """Apply a pointwise map slice by slice to TimeFields."""
    times = series[0].times
    out = [apply_pointwise(func, *[s.slice(i) for s in series]) for i in range(len(times))]
    return TimeField.from_fields(times, out)


def _free(u0, times):
    return duhamel(TimeField.zeros(u0.grid, times), initial=u0)


def initial_iterate(u0, fn, times):
    pu0 = _free(u0, times)
    zero = TimeField.zeros(u0.grid, times)
    return ParacontrolledFunction(pu0, _pointwise_series(fn.derivative(0), pu0), zero, zero)


def phi_map(uhat, xi, fn, u0):
    """One application of the fixed-point map (see module docstring)."""
    f0, f1 = fn.derivative(0), fn.derivative(1)
    z = TimeField.constant_in_time(uhat.times, xi.zeta)
    src = _pointwise_series(lambda a, b: f0(a) * b, uhat.u, z)
    v = duhamel(src, initial=u0)
    u1 = _pointwise_series(f0, uhat.u)
    u2 = _pointwise_series(lambda a, b: f1(a) * b, uhat.u, uhat.u1)
    return ParacontrolledFunction(v, u1, u2, u2)


def solve_gpam(u0, xi, fn, opts=SolveOptions()):
    """Picard iteration of :func:`phi_map` from the initial iterate."""
    times = opts.timegrid()
    if len(xi.times) != len(times) or not np.allclose(xi.times, times, rtol=0, atol=1e-14):
        raise ValueError("enhanced noise was built on a different time grid")
    xi.zeta.check_grid(u0)
    cur = initial_iterate(u0, fn, times)
    history = []
    for it in range(1, opts.max_iters + 1):
        try:
            nxt = phi_map(cur, xi, fn, u0)
        except InvalidFieldError:
            raise DivergenceError(it, "non-finite values") from None
        if nxt.u.sup() > BLOWUP:
            raise DivergenceError(it)
        history.append(nxt.distance(cur))
        cur = nxt
        if history[-1] <= opts.fp_tol:
            cur.history = history
            return cur
    raise NonConvergenceError(history)


def reference_solve(u0, zeta, fn, opts=SolveOptions()):
    """Classical oracle: second-order exponential Runge-Kutta (Cox-Matthews ETDRK2).

    With ``N(u) = f(u) zeta`` (dealiased) and step ``h``:
    ``a = e^{-hL} u + h phi1 N(u)``, ``u' = a + h phi2 (N(a) - N(u))`` where
    ``phi1(z) = (1 - e^{-z})/z`` and ``phi2(z) = (e^{-z} - 1 + z)/z^2``.
    """
    zeta.check_grid(u0)
    grid = u0.grid
    h = opts.dt
    z = h * grid.k2
    small = z < 1e-4
    zs = np.where(small, 1.0, z)
    e = np.exp(-z)
    phi1 = np.where(small, 1 - z / 2 + z * z / 6, -np.expm1(-zs) / zs)
    phi2 = np.where(small, 0.5 - z / 6 + z * z / 24, (np.expm1(-zs) + zs) / zs ** 2)
    f0 = fn.derivative(0)

    def N(spec):
        return apply_pointwise(lambda a, b: f0(a) * b, Field.from_spectrum(grid, spec), zeta).spectrum

    spec = u0.spectrum.copy()
    out = [u0]
    for step in range(opts.steps):
        n0 = N(spec)
        a = e * spec + h * phi1 * n0
        spec = a + h * phi2 * (N(a) - n0)
        f = Field.from_spectrum(grid, spec)
        if not np.isfinite(f.sup()) or f.sup() > BLOWUP:
            raise DivergenceError(step + 1, "reference solver blew up")
        out.append(f)
    return TimeField.from_fields(opts.timegrid(), out)


# -- post-hoc checks ------------------------------------------------------------

def _slice_fit(f, window):
    return fit_exponent(block_sup_norms(f), window, max(f.sup(), np.finfo(float).tiny))


def _window(grid, window):
    from .registry import SUITE_WINDOW_START
    return tuple(window or (SUITE_WINDOW_START, grid.J - 2))


@dataclass
class AnsatzReport:
    u: object
    u1: object
    u_sharp: object
    u1_sharp: object

    @property
    def gain_u(self):
        return self.u_sharp.estimated_alpha - self.u.estimated_alpha

    @property
    def gain_u1(self):
        return self.u1_sharp.estimated_alpha - self.u1.estimated_alpha

    def to_dict(self):
        return {"u": self.u.to_dict(), "u1": self.u1.to_dict(),
                "u_sharp": self.u_sharp.to_dict(), "u1_sharp": self.u1_sharp.to_dict(),
                "gain_u": self.gain_u, "gain_u1": self.gain_u1}


def ansatz_residual(uhat, xi, slice_index=-1, window=None):
    """Slice exponents of u, u1 and of the two remainders."""
    w = _window(uhat.grid, window)
    us, u1s = uhat.remainders(xi)
    i = slice_index % len(uhat.times)
    return AnsatzReport(_slice_fit(uhat.u.slice(i), w), _slice_fit(uhat.u1.slice(i), w),
                        _slice_fit(us.slice(i), w), _slice_fit(u1s.slice(i), w))


def pointwise_bound_check(uhat, xi, fn, levels=range(2, 9)):
    """Ratios sup |u(e') - u(e) - f(u(e)) (Z1(e') - Z1(e))| / rho(e, e').

    For level ``k`` the pairs are separated by ``d = 2^-k`` of the period in
    space and by the multiple of the time step closest to ``d^2`` in time
    (``rho = sqrt(dtau) + d``).  Returns ``{k: ratio}``.
    """
    grid = uhat.grid
    if grid.dim != 1:
        raise ValueError("pointwise check implemented for one space dimension")
    times = uhat.times
    dt = times[1] - times[0]
    f0 = fn.derivative(0)
    u = uhat.u.values
    z1 = xi.Z1.values
    out = {}
    for k in levels:
        shift = grid.n >> k
        if shift < 1:
            raise ValueError(f"separation level {k} below the grid spacing")
        d = shift * grid.spacing
        steps = min(int(round(d * d / dt)), len(times) - 1)
        du = np.roll(u[steps:], -shift, axis=1) - u[:len(times) - steps]
        dz = np.roll(z1[steps:], -shift, axis=1) - z1[:len(times) - steps]
        num = np.abs(du - f0(u[:len(times) - steps]) * dz)
        rho = np.sqrt(steps * dt) + d
        out[int(k)] = float(num.max() / rho)
    return out


def product_residual(uhat, xi, fn, slice_index=-1):
    """The leftover of the canonical decomposition of f(u) zeta at one slice.

    Returns ``(residual, full_product)`` as Fields; the residual is
    ``f(u) zeta - [P_{f(u)} zeta + P_zeta f(u) + f'(u) u1 Res(Z1, zeta)
    + (f'(u) u11 + f''(u) u1^2) C(Z1, Z1; zeta) + f'(u) u2 Res(Z2, zeta)
    + 1/2 f''(u) u1^2 Res(Res(Z1, Z1), zeta)]``.
    """
    i = slice_index % len(uhat.times)
    f0, f1, f2 = fn.derivative(0), fn.derivative(1), fn.derivative(2)
    u, u1, u2, u11 = (c.slice(i) for c in uhat.components())
    zeta, z1, z2 = xi.zeta, xi.Z1.slice(i), xi.Z2.slice(i)
    fu = apply_pointwise(f0, u)
    full = apply_pointwise(lambda a, b: f0(a) * b, u, zeta)
    c1 = apply_pointwise(lambda a, b: f1(a) * b, u, u1)
    c2 = apply_pointwise(lambda a, b, c: f1(a) * c + f2(a) * b * b, u, u1, u11)
    c3 = apply_pointwise(lambda a, b: f1(a) * b, u, u2)
    c4 = apply_pointwise(lambda a, b: 0.5 * f2(a) * b * b, u, u1)
    rz = resonant(z1, z1)
    canon = (para(fu, zeta) + para(zeta, fu)
             + apply_pointwise(np.multiply, c1, resonant(z1, zeta))
             + apply_pointwise(np.multiply, c2, corrector_c(z1, z1, zeta))
             + apply_pointwise(np.multiply, c3, resonant(z2, zeta))
             + apply_pointwise(np.multiply, c4, resonant(rz, zeta)))
    return full - canon, para(fu, zeta)


def schauder_check(beta, eps=0.05, seeds=8, n=4096, T=1.0, steps=64, law="gaussian-holder",
                   window=None):
    """Exponent gain of the Duhamel operator on sources of spatial exponent beta.

    The source is ``v(t) = cos(2 pi t/T) v1 + sin(2 pi t/T) v2`` with independent
    samples ``v1, v2``; the output exponent is measured at the final slice.
    """
    if not -2 + 2 * eps < beta < 0:
        raise ValueError(f"beta must lie in (-2 + 2 eps, 0) = ({-2 + 2 * eps}, 0)")
    from .spectral import TorusGrid
    grid = TorusGrid(1, n)
    w = _window(grid, window)
    times = np.linspace(0.0, T, steps + 1)
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    norms_in, norms_out = [], []
    for s in seed_list:
        v1 = sample_field(NoiseSpec(beta, 2 * s, law), grid)
        v2 = sample_field(NoiseSpec(beta, 2 * s + 1, law), grid)
        c, sn = np.cos(2 * np.pi * times / T), np.sin(2 * np.pi * times / T)
        src = TimeField(grid, times, c[:, None] * v1.values + sn[:, None] * v2.values)
        out = duhamel(src).slice(len(times) - 1)
        norms_in.append((block_sup_norms(v1), v1.sup()))
        norms_out.append((block_sup_norms(out), out.sup()))
    fin, fout = ensemble_fit(norms_in, w), ensemble_fit(norms_out, w)
    gain = fout.estimated_alpha - fin.estimated_alpha
    threshold = 2 - 2 * eps - 0.2
    return {"beta": beta, "eps": eps, "seeds": seed_list, "window": list(w),
            "input_alpha": fin.estimated_alpha, "output_alpha": fout.estimated_alpha,
            "output_r2": fout.r_squared, "gain": gain, "threshold": threshold,
            "pass": bool(gain >= threshold)}


# -- noise and IO ----------------------------------------------------------------

def make_noise(grid, alpha=0.6, eps=1e-2, seed=0, amplitude=1.0, opts=SolveOptions(),
               law="gaussian-holder"):
    """Mollified noise of spatial exponent alpha - 2 and its enhancement."""
    zeta = mollify(sample_field(NoiseSpec(alpha - 2.0, seed, law), grid), eps) * amplitude
    meta = {"alpha": alpha, "eps": eps, "seed": seed, "amplitude": amplitude, "law": law,
            "dim": grid.dim, "n": grid.n}
    return build_enhancement(zeta, opts.timegrid(), meta)


def save_solution(uhat, directory, every=1):
    """PCF1 slices of u plus a manifest and the convergence trace CSV."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for i in range(0, len(uhat.times), every):
        name = f"u_{i:05d}.pcf"
        save_field(os.path.join(directory, name), uhat.u.slice(i))
        files.append({"file": name, "time": float(uhat.times[i])})
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump({"slices": files, "iterations": len(uhat.history)}, fh, indent=2)
    with open(os.path.join(directory, "convergence.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "residual"])
        for k, r in enumerate(uhat.history, 1):
            w.writerow([k, f"{r:.6e}"])
