import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from paracalc.holder import besov_norm
from paracalc.lp import decompose, reconstruct
from paracalc.paraproducts import para, resonant

from conftest import sample

seeds = st.integers(min_value=0, max_value=2 ** 32)
alphas = st.floats(min_value=-1.5, max_value=1.2)
scalars = st.floats(min_value=-10, max_value=10, allow_nan=False)
N = 256
settings.register_profile("paracalc", max_examples=25, deadline=None)
settings.load_profile("paracalc")


@given(alphas, alphas, seeds, seeds, seeds, scalars, scalars)
def test_paraproduct_bilinear(a1, a2, s1, s2, s3, c1, c2):
    f, g, h = sample(a1, s1, N), sample(a2, s2, N), sample(a2, s3, N)
    for op in (para, resonant):
        lhs = op(f, g * c1 + h * c2)
        rhs = op(f, g) * c1 + op(f, h) * c2
        scale = 1.0 + abs(c1) * op(f, g).sup() + abs(c2) * op(f, h).sup()
        assert (lhs - rhs).sup() <= 1e-12 * scale


@given(alphas, alphas, seeds, seeds, st.sampled_from(["smooth", "sharp"]))
def test_split_identity(a1, a2, s1, s2, partition):
    from paracalc.spectral import product
    f, g = sample(a1, s1, N, partition), sample(a2, s2, N, partition)
    total = para(f, g) + para(g, f) + resonant(f, g)
    assert (total - product(f, g)).sup() <= 1e-11 * (1.0 + f.sup() * g.sup())


@given(alphas, seeds, seeds, scalars, st.floats(min_value=-1.0, max_value=1.5))
def test_besov_norm_scales_and_is_subadditive(a, s1, s2, c, beta):
    f, g = sample(a, s1, N), sample(a, s2, N)
    nf, ng = besov_norm(f, beta).norm, besov_norm(g, beta).norm
    assert np.isclose(besov_norm(f * c, beta).norm, abs(c) * nf, rtol=1e-12, atol=1e-300)
    assert besov_norm(f + g, beta).norm <= (nf + ng) * (1 + 1e-12)


@given(alphas, seeds, st.sampled_from(["smooth", "sharp"]))
def test_reconstruction(a, s, partition):
    f = sample(a, s, N, partition)
    assert (reconstruct(decompose(f)) - f).sup() <= 1e-12 * max(1.0, f.sup())
