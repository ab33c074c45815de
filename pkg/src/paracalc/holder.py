"""Hölder-Besov norms and empirical regularity exponents.

The exponent of a field is measured as minus the least-squares slope of
``log2 ||Delta_j f||_inf`` against ``j`` over a window of blocks.  The default
window ``[3, J-2]`` drops the bottom blocks (constants, low modes) and the top
two blocks (grid truncation).
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .lp import block_sup_norms

__all__ = [
    "ExponentFit", "HolderEstimate", "InsufficientDataError", "default_window",
    "besov_norm", "estimate_exponent", "fit_exponent", "time_sliced_norm",
    "exponent_report", "ensemble_fit",
]

ZERO_BLOCK_RTOL = 1e-13


class InsufficientDataError(ValueError):
    """Fewer than four usable blocks in the regression window."""


@dataclass
class ExponentFit:
    window: tuple
    slope: float
    intercept: float
    r_squared: float
    estimated_alpha: float
    excluded: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


@dataclass
class HolderEstimate:
    alpha: float
    norm: float
    per_block: list


def default_window(grid):
    return (3, grid.J - 2)


def _check_window(grid, window):
    lo, hi = window
    if lo < 2 or hi > grid.J - 2:
        raise ValueError(f"window {window} must lie within [2, {grid.J - 2}]")
    if hi - lo + 1 < 4:
        raise ValueError(f"window {window} has fewer than 4 blocks")


def besov_norm(f, alpha, window=None):
    """||Delta_{-1} f||_inf + max over the window of 2^{j alpha} ||Delta_j f||_inf."""
    if not -3 < alpha < 3:
        raise ValueError("alpha must lie in (-3, 3)")
    norms = block_sup_norms(f)
    lo, hi = window or default_window(f.grid)
    js = np.arange(lo, hi + 1)
    weighted = 2.0 ** (js * alpha) * norms[js + 1]
    return HolderEstimate(alpha, float(norms[0] + weighted.max()), weighted.tolist())


def fit_exponent(norms, window, scale):
    """Regression on an array of block sup-norms (index j+1 holds block j)."""
    lo, hi = window
    js, logs, excluded = [], [], []
    for j in range(lo, hi + 1):
        s = norms[j + 1]
        if s <= ZERO_BLOCK_RTOL * scale:
            excluded.append(j)
        else:
            js.append(j)
            logs.append(np.log2(s))
    if len(js) < 4:
        raise InsufficientDataError(
            f"only {len(js)} usable blocks in window {tuple(window)} (excluded {excluded})")
    js = np.asarray(js, dtype=float)
    logs = np.asarray(logs)
    slope, intercept = np.polyfit(js, logs, 1)
    resid = logs - (slope * js + intercept)
    ss_tot = np.sum((logs - logs.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit((int(lo), int(hi)), float(slope), float(intercept),
                       float(r2), float(-slope), excluded)


def ensemble_fit(results, window):
    """Fit of the seed-averaged log2 block norms.

    ``results`` is a list of ``(block_norms, sup)`` pairs.  Blocks that vanish
    (relative to the field's sup) in any realization are dropped.  The slope of
    the averaged curve equals the mean of the per-seed slopes when no block is
    dropped; r^2 refers to the averaged curve.
    """
    tiny = np.finfo(float).tiny
    logs = []
    dead = np.zeros(len(results[0][0]), dtype=bool)
    for norms, scale in results:
        dead |= norms <= ZERO_BLOCK_RTOL * max(scale, tiny)
        logs.append(np.log2(np.maximum(norms, tiny)))
    mean = 2.0 ** np.mean(logs, axis=0)
    mean[dead] = 0.0
    return fit_exponent(mean, window, 1.0)


def estimate_exponent(f, window=None):
    window = tuple(window or default_window(f.grid))
    _check_window(f.grid, window)
    scale = max(f.sup(), np.finfo(float).tiny)
    return fit_exponent(block_sup_norms(f), window, scale)


def time_sliced_norm(u, alpha, window=None):
    """sup over time slices of the Besov norm of each slice."""
    if len(u) == 0:
        raise ValueError("empty time grid")
    return max(besov_norm(s, alpha, window).norm for s in u.slices())


def exponent_report(operator, input_alphas, theory, fits, seeds, tolerance=None):
    """JSON-ready summary of an ensemble of exponent fits."""
    est = float(np.mean([f.estimated_alpha for f in fits]))
    r2 = float(np.mean([f.r_squared for f in fits]))
    rep = {
        "operator": operator,
        "input_alphas": [float(a) for a in input_alphas],
        "theory_exponent": None if theory is None else float(theory),
        "estimated_alpha": est,
        "estimated_alpha_per_seed": [f.estimated_alpha for f in fits],
        "r2": r2,
        "window": list(fits[0].window),
        "seeds": list(seeds),
    }
    if tolerance is not None:
        rep["tolerance"] = float(tolerance)
    return rep
