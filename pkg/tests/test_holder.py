import numpy as np
import pytest

from paracalc.holder import (InsufficientDataError, besov_norm, ensemble_fit, estimate_exponent,
                             time_sliced_norm)
from paracalc.lp import block_sup_norms
from paracalc.spectral import Field, TimeField, TorusGrid, heat_propagate

from conftest import sample, weierstrass


def test_besov_trivial_cases():
    g = TorusGrid(1, 1024)
    assert besov_norm(Field.zeros(g), 0.5).norm == 0.0
    assert besov_norm(Field.constant(g, 7.0), 1.3).norm == pytest.approx(7.0)
    with pytest.raises(ValueError):
        besov_norm(Field.zeros(g), 3.0)


def test_besov_weierstrass_sharp():
    g = TorusGrid(1, 4096, "sharp")
    est = besov_norm(weierstrass(g, 0.5), 0.5)
    assert max(est.per_block) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
def test_weierstrass_exponents(alpha):
    g = TorusGrid(1, 4096, "sharp")
    fit = estimate_exponent(weierstrass(g, alpha))
    assert fit.estimated_alpha == pytest.approx(alpha, abs=0.02)
    assert fit.r_squared >= 0.999
    assert fit.window == (3, 9)


def test_sampled_exponent_mean():
    est = [estimate_exponent(sample(0.5, s)).estimated_alpha for s in range(8)]
    assert np.mean(est) == pytest.approx(0.5, abs=0.1)


def test_single_mode_is_insufficient():
    g = TorusGrid(1, 4096)
    with pytest.raises(InsufficientDataError):
        estimate_exponent(Field.from_function(g, lambda x: np.cos(32 * x)))


def test_window_validation():
    f = sample(0.5, 0)
    with pytest.raises(ValueError):
        estimate_exponent(f, (1, 9))
    with pytest.raises(ValueError):
        estimate_exponent(f, (3, 5))


def test_scaling_and_triangle():
    f, g = sample(0.5, 1), sample(0.5, 2)
    nf = besov_norm(f, 0.5).norm
    assert besov_norm(f * -3.0, 0.5).norm == pytest.approx(3.0 * nf, rel=1e-14)
    assert besov_norm(f + g, 0.5).norm <= (nf + besov_norm(g, 0.5).norm) * (1 + 1e-12)


def test_time_sliced_norm():
    g = TorusGrid(1, 1024, "sharp")
    times = np.linspace(0, 1, 5)
    assert time_sliced_norm(TimeField.zeros(g, times), 0.5) == 0.0
    w = weierstrass(g, 0.5)
    const = TimeField.constant_in_time(times, w)
    assert time_sliced_norm(const, 0.5) == pytest.approx(besov_norm(w, 0.5).norm)
    flow = TimeField.from_fields(times, [heat_propagate(w, t) for t in times])
    norms = [besov_norm(s, 0.5).norm for s in flow.slices()]
    assert int(np.argmax(norms)) == 0


def test_ensemble_fit_is_mean_of_slopes():
    res = [(block_sup_norms(f), f.sup()) for f in (sample(0.5, s) for s in range(4))]
    ens = ensemble_fit(res, (3, 9))
    singles = [estimate_exponent(sample(0.5, s)).estimated_alpha for s in range(4)]
    assert ens.estimated_alpha == pytest.approx(np.mean(singles), abs=1e-12)
