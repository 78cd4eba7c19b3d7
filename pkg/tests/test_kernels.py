import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfb import _kernels
from noisyfb.nblock import _Layout, build_noisy_problem
from noisyfb.noise import MA1, White, covariance
from noisyfb.spectral import SpectralProblem

needs_numba = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not available")


def test_hessian_numpy_matches_dense():
    n = 3
    prob, _ = build_noisy_problem(covariance(MA1(0.3), n), covariance(White(0.25), n), 2.0)
    m = prob.lmi
    rng = np.random.default_rng(0)
    A = rng.standard_normal((m.dim_out, m.dim_out))
    W = A @ A.T
    coeffs = [m.coefficient(k) for k in range(m.x_dim)]
    dense = np.array([[np.trace(W @ Ak @ W @ Al) for Al in coeffs] for Ak in coeffs])
    got = _kernels.logdet_hessian_numpy(W, m.rows, m.cols, m.vals, m.coords, m.x_dim)
    np.testing.assert_allclose(got, dense, rtol=1e-10, atol=1e-10)


@needs_numba
def test_hessian_numba_matches_numpy():
    n = 5
    prob, _ = build_noisy_problem(covariance(MA1(0.1), n), covariance(White(0.1), n), 10.0)
    m = prob.lmi
    rng = np.random.default_rng(1)
    A = rng.standard_normal((m.dim_out, m.dim_out))
    W = A @ A.T
    args = (W, m.rows, m.cols, m.vals, m.coords, m.x_dim)
    np.testing.assert_allclose(
        _kernels.logdet_hessian_numba(*args), _kernels.logdet_hessian_numpy(*args), rtol=1e-10, atol=1e-9
    )


@needs_numba
@given(
    st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=200),
    st.floats(0.0, 1e4),
)
def test_waterfill_level_variants_agree(floor, budget):
    f = np.array(floor)
    w = np.full(f.size, 1.0 / f.size)
    a = _kernels.waterfill_level_numpy(f, w, budget)
    b = _kernels.waterfill_level_numba(f, w, budget)
    assert a == pytest.approx(b, rel=1e-12)


@needs_numba
@given(st.integers(0, 2**32 - 1))
def test_spectral_score_variants_agree(seed):
    prob = SpectralProblem(MA1(0.4).psd(), White(0.1).psd(), 5.0, taps=6, grid=256)
    b = np.random.default_rng(seed).uniform(-0.4, 0.4, 6)
    args = (b, prob.cos_tab, prob.sin_tab, prob.s_w, prob.s_v, prob.weights, prob.P)
    va, ca, la = _kernels.spectral_score_numpy(*args)
    vb, cb, lb = _kernels.spectral_score_numba(*args)
    assert ca == pytest.approx(cb, rel=1e-12)
    if np.isfinite(va):
        assert va == pytest.approx(vb, rel=1e-10, abs=1e-12)
        assert la == pytest.approx(lb, rel=1e-12)
    else:
        assert not np.isfinite(vb)


def test_waterfill_level_edge_cases():
    f = np.array([1.0, 3.0])
    w = np.array([0.5, 0.5])
    assert _kernels.waterfill_level_numpy(f, w, 0.0) == pytest.approx(1.0)
    assert _kernels.waterfill_level_numpy(f, w, 0.5) == pytest.approx(2.0)
    assert _kernels.waterfill_level_numpy(f, w, 2.0) == pytest.approx(4.0)


def test_layout_roundtrip():
    lay = _Layout(4)
    rng = np.random.default_rng(2)
    A = rng.standard_normal((4, 4))
    H = A + A.T
    B = np.tril(rng.standard_normal((4, 4)), -1)
    H2, B2 = lay.unpack(lay.pack(H, B))
    np.testing.assert_array_equal(H2, H)
    np.testing.assert_array_equal(B2, B)
