import numpy as np
import pytest

from paracalc.holder import ensemble_fit
from paracalc.lp import block_sup_norms, partial_sum
from paracalc.paraproducts import (BackendConfig, calderon_check, full_split, high_part,
                                   modified_para, modified_para_parabolic, para, para_diff,
                                   para_with_backend, resonant, semigroup_para)
from paracalc.spectral import Field, TimeField, TorusGrid, duhamel, laplacian, product

from conftest import high_blocks, sample, weierstrass


def test_split_matches_brute_force(frozen):
    d = frozen["split16_sharp"]
    g = TorusGrid(1, 16, "sharp")
    f, h = Field(g, d["f"]), Field(g, d["g"])
    s = full_split(f, h)
    assert np.abs(s.para_fg.values - d["para_fg"]).max() <= 1e-12
    assert np.abs(s.para_gf.values - d["para_gf"]).max() <= 1e-12
    assert np.abs(s.resonant.values - d["resonant"]).max() <= 1e-12


@pytest.mark.parametrize("kind", ["smooth", "sharp"])
def test_split_identity(kind):
    g = TorusGrid(1, 4096, kind)
    w = weierstrass(g, 0.5)
    assert (full_split(w, w).total() - product(w, w)).sup() <= 1e-10 * product(w, w).sup()
    f = sample(0.3, 1, n=1024, partition=kind)
    one = Field.constant(f.grid, 1.0)
    s = full_split(f, one)
    assert (s.para_gf + s.resonant - f).sup() <= 1e-12 * f.sup()


def test_constants():
    f = sample(0.5, 2, n=512)
    c = Field.constant(f.grid, 2.5)
    assert para(f, c).sup() <= 1e-14
    assert (para(c, f) - (f - partial_sum(f, 0)) * 2.5).sup() <= 1e-12
    assert (resonant(Field.constant(f.grid, 2.0), c) - 5.0).sup() <= 1e-13
    assert modified_para(f, c).sup() <= 1e-14
    assert (high_part(f) - (f - partial_sum(f, 0))).sup() <= 1e-12


def test_resonant_single_high_mode_with_constant():
    g = TorusGrid(1, 256)
    mode = Field.from_function(g, lambda x: np.cos(16 * x))
    assert resonant(mode, Field.constant(g, 3.0)).sup() <= 1e-14


def test_modified_para_single_mode_sharp():
    g = TorusGrid(1, 256, "sharp")
    f = Field.from_function(g, lambda x: np.cos(x))
    h = Field.from_function(g, lambda x: np.cos(64 * x))
    # P_f(L h) = 64^2 P_f h exactly, so M_f h = L^{-1}(64^2 P_f h)
    from paracalc.spectral import inverse_laplacian
    expect = inverse_laplacian(para(f, h) * 64.0 ** 2)
    assert (modified_para(f, h) - expect).sup() <= 1e-12
    # and the two paraproducts agree up to the relative frequency spread 1/64
    assert (modified_para(f, h) - para(f, h)).sup() <= 2.0 / 63 * para(f, h).sup()


def test_para_diff_definition_and_constants():
    a, h = sample(0.6, 3, n=512), sample(0.6, 4, n=512)
    c = Field.constant(a.grid, 1.7)
    assert high_blocks(para_diff(c, h), 2) <= 1e-12
    assert para_diff(a, c).sup() <= 1e-14
    # differs from M_a g - P_a g only by the low block S_0 of M_a g
    other = modified_para(a, h) - para(a, h)
    diff = para_diff(a, h) - other
    assert high_blocks(diff, 2) <= 1e-12 * other.sup()


def _ens(op, alphas, n=4096, window=(4, 9)):
    res = []
    for s in range(8):
        xs = [sample(a, 100 * s + i, n=n) for i, a in enumerate(alphas)]
        out = op(*xs)
        res.append((block_sup_norms(out), out.sup()))
    return ensemble_fit(res, window)


def test_modified_minus_plain_exponent():
    fit = _ens(lambda f, g: modified_para(f, g) - para(f, g), (0.5, 0.7))
    assert fit.estimated_alpha == pytest.approx(1.2, abs=0.2)


def test_parabolic_modified_para():
    g = TorusGrid(1, 64)
    times = np.linspace(0, 0.5, 33)
    y = sample(-0.5, 5, n=64)
    assert modified_para_parabolic(TimeField.zeros(g, times), y).sup() == 0.0
    one = TimeField.constant_in_time(times, Field.constant(g, 1.0))
    out = modified_para_parabolic(one, y)
    hy = high_part(y)
    k2 = g.k2
    for i in (8, 32):
        t = times[i]
        sym = np.where(k2 > 0, -np.expm1(-t * k2) / np.where(k2 > 0, k2, 1), 0.0)
        exact = Field.from_spectrum(g, sym * hy.spectrum)
        assert (out.slice(i) - exact).sup() <= 1e-12 * max(exact.sup(), 1)
    # intertwining: discrete (d/dt + L) of the output reproduces P_v Y up to O(dt)
    v = TimeField.from_fields(times, [Field.from_function(g, lambda x, t=t: 1 + 0.5 * np.cos(x + t))
                                      for t in times])
    z = modified_para_parabolic(v, y)
    dt = times[1] - times[0]
    errs = []
    for i in range(4, 32):
        lz = laplacian(Field(g, 0.5 * (z.values[i] + z.values[i + 1])))
        lhs = (z.values[i + 1] - z.values[i]) / dt + lz.values
        rhs = 0.5 * (para(v.slice(i), y).values + para(v.slice(i + 1), y).values)
        errs.append(np.abs(lhs - rhs).max())
    scale = para(v.slice(0), y).sup()
    assert max(errs) <= 50 * dt * scale


def test_semigroup_backend():
    g = TorusGrid(1, 128)
    cfg = BackendConfig("semigroup", 2, 16)
    f = sample(0.5, 0, n=128)
    assert calderon_check(f, cfg) <= 1e-3
    assert semigroup_para(f, Field.constant(g, 1.0), cfg).sup() <= 1e-10
    assert para_with_backend(f, f, BackendConfig()) .sup() == para(f, f).sup()
    with pytest.raises(ValueError):
        BackendConfig("fourier")
    with pytest.raises(ValueError):
        BackendConfig("semigroup", 1)


def test_semigroup_exponent_matches_lp():
    cfg = BackendConfig("semigroup", 2, 26)
    lp = _ens(para, (0.5, 0.7))
    sg = _ens(lambda f, h: semigroup_para(f, h, cfg), (0.5, 0.7))
    assert abs(lp.estimated_alpha - sg.estimated_alpha) <= 0.1
