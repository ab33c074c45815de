import numpy as np
import pytest

from paracalc.holder import ensemble_fit
from paracalc.lp import block_sup_norms
from paracalc.taylor import Nonlinearity, paralinearize, taylor_expand, taylor_lipschitz_probe

from conftest import high_blocks, sample


@pytest.mark.parametrize("name", ["sin", "cos", "tanh", "identity", "square", "cube", "one"])
def test_builtin_derivatives_consistent(name):
    assert Nonlinearity.by_name(name).check_consistency() < 1e-5


def test_inconsistent_derivatives_rejected():
    bad = Nonlinearity("bad", (np.sin, np.sin, np.sin, np.sin, np.sin))
    with pytest.raises(ValueError, match="inconsistent"):
        bad.check_consistency()


def test_unknown_nonlinearity():
    with pytest.raises(ValueError, match="unknown nonlinearity"):
        Nonlinearity.by_name("exp")
    assert Nonlinearity.by_name("constant:2.5")(np.array([0.0]))[0] == 2.5


def test_order_validated():
    with pytest.raises(ValueError, match="order"):
        taylor_expand(Nonlinearity.sin(), sample(0.5, n=256), 4)


@pytest.mark.parametrize("order", [1, 2, 3])
@pytest.mark.parametrize("flavor", ["plain", "modified"])
def test_expansion_identity(order, flavor):
    u = sample(0.5, 3, n=1024)
    exp = taylor_expand(Nonlinearity.tanh(), u, order, flavor)
    assert exp.identity_error() <= 1e-10
    assert len(exp.terms) == order * (order + 1) // 2


@pytest.mark.parametrize("degree,order", [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)])
def test_polynomials_have_no_high_remainder(degree, order):
    u = sample(0.5, 1, n=1024)
    exp = taylor_expand(Nonlinearity.monomial(degree), u, order)
    assert high_blocks(exp.remainder, 3) <= 1e-12 * max(1.0, exp.fu.sup())


def test_paralinearization_of_identity_is_exact():
    u = sample(0.4, 2, n=1024)
    exp = paralinearize(Nonlinearity.identity(), u)
    # P_1 u = u minus its lowest blocks
    assert high_blocks(exp.remainder, 2) <= 1e-12


def test_constant_map_has_vanishing_terms():
    u = sample(0.5, 0, n=512)
    exp = taylor_expand(Nonlinearity.constant(3.0), u, 3)
    assert max(t.value.sup() for t in exp.terms) <= 1e-12
    assert abs(exp.remainder.mean() - 3.0) < 1e-12


def test_remainder_gains_with_order():
    seeds = range(4)
    fits = {}
    for order in (1, 2, 3):
        res = []
        for s in seeds:
            r = taylor_expand(Nonlinearity.sin(), sample(0.5, s), order).remainder
            res.append((block_sup_norms(r), r.sup()))
        fits[order] = ensemble_fit(res, (4, 9)).estimated_alpha
    assert fits[1] < fits[2] < fits[3]
    assert abs(fits[1] - 1.0) <= 0.2


def test_modified_flavor_close_to_plain_remainder_exponent():
    u = sample(0.5, 0)
    plain = taylor_expand(Nonlinearity.sin(), u, 2, "plain").remainder_exponent((4, 9))
    mod = taylor_expand(Nonlinearity.sin(), u, 2, "modified").remainder_exponent((4, 9))
    assert abs(plain.estimated_alpha - mod.estimated_alpha) <= 0.3


def test_lipschitz_probe_zero_and_stable():
    u = sample(0.5, 0, n=1024)
    w = sample(0.5, 7, n=1024)
    fn = Nonlinearity.sin()
    assert taylor_lipschitz_probe(fn, u, u, 2) == 0.0
    r1 = taylor_lipschitz_probe(fn, u, u + w * 1e-2, 2)
    r2 = taylor_lipschitz_probe(fn, u, u + w * 1e-3, 2)
    assert np.isfinite(r1) and r1 > 0
    assert 1 / 3 <= r1 / r2 <= 3
