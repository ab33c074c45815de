import numpy as np
import pytest

from paracalc.spectral import (Field, GridMismatchError, InvalidFieldError, Multiplier, TimeField,
                               TorusGrid, apply_multiplier, apply_pointwise, derivative, duhamel,
                               heat_propagate, inverse_laplacian, laplacian, load_field, product,
                               save_field, transform_roundtrip)

from conftest import sample


def cosine(grid, k):
    return Field.from_function(grid, lambda x: np.cos(k * x))


def test_roundtrip_constant_and_mode():
    g = TorusGrid(1, 64)
    one = Field.constant(g, 1.0)
    assert np.abs(transform_roundtrip(one).values - 1.0).max() <= 1e-12
    c3 = cosine(g, 3)
    assert np.abs(transform_roundtrip(c3).values - c3.values).max() <= 1e-12


def test_roundtrip_random_256():
    f = sample(0.3, 4, n=256)
    assert np.abs(transform_roundtrip(f).values - f.values).max() <= 1e-10 * f.sup()


def test_forward_matches_naive_dft(frozen):
    d = frozen["dft16"]
    g = TorusGrid(1, 16)
    spec = g.forward(np.array(d["values"]))
    assert np.allclose(spec, np.array(d["re"]) + 1j * np.array(d["im"]), atol=1e-13)


def test_zero_coefficient_is_mean():
    f = sample(0.5, 1, n=128) + 2.5
    assert f.spectrum[0].real == pytest.approx(f.values.mean(), abs=1e-14)


def test_parseval():
    f = sample(-0.5, 2, n=256)
    lhs = np.sum(f.values ** 2) / f.grid.size
    rhs = np.sum(np.abs(f.spectrum) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_multipliers_on_eigenmodes():
    g = TorusGrid(1, 64)
    c2 = cosine(g, 2)
    assert (apply_multiplier(c2, Multiplier(lambda k: np.ones_like(k))) - c2).sup() <= 1e-14
    assert (laplacian(c2) - c2 * 4.0).sup() <= 1e-11
    assert (apply_multiplier(c2, Multiplier.laplacian()) - c2 * 4.0).sup() <= 1e-11
    assert (inverse_laplacian(c2) - c2 / 4.0).sup() <= 1e-13
    assert inverse_laplacian(Field.constant(g, 5.0)).sup() == 0.0


def test_derivative_matches_finite_differences():
    g = TorusGrid(1, 32)
    f = Field.from_function(g, lambda x: np.sin(x) + 0.3 * np.cos(2 * x))
    h = g.spacing
    fd = (np.roll(f.values, -1) - np.roll(f.values, 1)) / (2 * h)
    err = np.abs(derivative(f).values - fd).max()
    assert err <= 2.0 * h * h      # O(h^2) with constant |f'''|/6 <= 1


def test_inverse_laplacian_roundtrip():
    f = sample(0.2, 7, n=64)
    assert (laplacian(inverse_laplacian(f)) - f).sup() <= 1e-10 * f.sup()


def test_heat_propagate():
    g = TorusGrid(1, 64)
    c1 = cosine(g, 1)
    assert heat_propagate(c1, 0.0) is c1
    assert (heat_propagate(c1, 1.0) - c1 * np.exp(-1.0)).sup() <= 1e-12
    f = sample(0.5, 3, n=128)
    two = heat_propagate(heat_propagate(f, 0.1), 0.2)
    assert (two - heat_propagate(f, 0.3)).sup() <= 1e-12
    assert heat_propagate(f + 3.0, 0.5).mean() == pytest.approx((f + 3.0).mean(), abs=1e-14)
    with pytest.raises(ValueError):
        heat_propagate(f, -1.0)


def test_dealiased_product_exact_for_polynomials():
    g = TorusGrid(1, 64)
    u = Field.from_function(g, lambda x: np.cos(5 * x) + np.sin(9 * x))
    # (cos 5x)^2 etc: every product frequency is < 32, so the product is exact
    exact = u.values ** 2
    assert np.abs(product(u, u).values - exact).max() <= 1e-13


def test_pointwise_nonfinite_raises():
    g = TorusGrid(1, 32)
    with pytest.raises(InvalidFieldError), np.errstate(divide="ignore"):
        apply_pointwise(lambda a: a / 0.0, Field.constant(g, 1.0))
    with pytest.raises(InvalidFieldError):
        Field(g, np.full(32, np.nan))


def test_grid_mismatch_raises():
    with pytest.raises(GridMismatchError):
        product(Field.zeros(TorusGrid(1, 32)), Field.zeros(TorusGrid(1, 64)))


def test_grid_validation():
    for bad in [dict(dim=3, n=64), dict(dim=1, n=48), dict(dim=1, n=64, partition="x")]:
        with pytest.raises(ValueError):
            TorusGrid(**bad)


def test_duhamel_exact_for_affine_sources():
    g = TorusGrid(1, 32)
    times = np.linspace(0, 0.5, 11)
    c3 = cosine(g, 3)
    # source (1 + t) cos 3x: v = [ (1+t)/9 - 1/81 - (1/9 - 1/81) e^{-9t} ] cos 3x
    src = TimeField(g, times, (1 + times)[:, None] * c3.values[None, :])
    v = duhamel(src)
    amp = (1 + times) / 9 - 1 / 81 - (1 / 9 - 1 / 81) * np.exp(-9 * times)
    assert np.abs(v.values - amp[:, None] * c3.values[None, :]).max() <= 1e-13


def test_pcf1_roundtrip(tmp_path):
    f = sample(0.5, 0, n=64)
    save_field(tmp_path / "f.pcf", f)
    g = load_field(tmp_path / "f.pcf")
    assert np.array_equal(g.values, f.values)
    raw = (tmp_path / "f.pcf").read_bytes()
    (tmp_path / "bad.pcf").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(InvalidFieldError):
        load_field(tmp_path / "bad.pcf")


def test_two_dimensional_grid():
    g = TorusGrid(2, 32)
    f = Field.from_function(g, lambda x, y: np.cos(x) * np.cos(2 * y))
    assert (laplacian(f) - f * 5.0).sup() <= 1e-11
