import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfb import spectral
from noisyfb.noise import AR1, MA1, White
from noisyfb.spectral import (
    SpectralProblem,
    frequency_grid,
    noisy_spectral_bound,
    nonfeedback_shannon,
    perfect_feedback_shannon,
    waterfill_frequency,
)


def test_grid_weights():
    theta, w = frequency_grid(8)
    assert theta.size == 9 and theta[-1] == pytest.approx(np.pi)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)


def test_waterfill_flat():
    level, fill, value = waterfill_frequency(np.ones(65), np.ones(65), 1.0)
    assert level == pytest.approx(2.0)
    assert value / np.log(2) == pytest.approx(0.5)
    np.testing.assert_allclose(fill, 1.0)


def test_waterfill_zero_budget():
    floor = np.linspace(1.0, 2.0, 65)
    ref = np.full(65, 1.5)
    _, fill, value = waterfill_frequency(floor, ref, 0.0)
    assert np.all(fill == 0)
    w = frequency_grid(64)[1]
    assert value == pytest.approx(0.5 * np.dot(w, np.log(floor / ref)))


def test_waterfill_two_level():
    floor = np.array([1.0, 1.0, 3.0, 3.0])
    weights = np.full(4, 0.25)
    level, fill, value = waterfill_frequency(floor, floor, 1.0, weights)
    assert level == pytest.approx(3.0)
    np.testing.assert_allclose(fill, [2, 2, 0, 0])
    assert value == pytest.approx(0.5 * 0.5 * np.log(3.0))


def test_nonfeedback_examples():
    assert nonfeedback_shannon(White(1.0).psd(), 10.0) == pytest.approx(0.5 * np.log2(11), abs=1e-12)
    S = MA1(0.1).psd()
    assert nonfeedback_shannon(S, 10.0) >= 0.5 * np.log2(1 + 10 / 1.21)
    assert abs(nonfeedback_shannon(S, 10.0, 2048) - nonfeedback_shannon(S, 10.0, 4096)) <= 1e-6


def test_zero_taps_is_nonfeedback():
    S = MA1(0.3).psd()
    sol = noisy_spectral_bound(SpectralProblem(S, White(0.1).psd(), 4.0, taps=0))
    assert sol.value_bits == nonfeedback_shannon(S, 4.0)


def test_huge_feedback_noise_is_nonfeedback():
    S = MA1(0.1).psd()
    sol = noisy_spectral_bound(SpectralProblem(S, White(1e6).psd(), 10.0, taps=4, grid=512))
    assert sol.value_bits == pytest.approx(nonfeedback_shannon(S, 10.0, 512), abs=1e-3)


def test_zero_feedback_noise_is_perfect_feedback():
    S = MA1(0.5).psd()
    a = noisy_spectral_bound(SpectralProblem(S, White(0.0).psd(), 2.0, taps=4, grid=256)).value_bits
    b = perfect_feedback_shannon(S, 2.0, taps=4, M=256).value_bits
    assert a == pytest.approx(b, abs=1e-6)


def test_perfect_feedback_monotone_in_taps():
    S = MA1(0.5).psd()
    vals = [perfect_feedback_shannon(S, 2.0, taps=k, M=256).value_bits for k in (2, 4, 8)]
    assert vals[0] <= vals[1] + 1e-9 <= vals[2] + 2e-9
    assert vals[0] >= nonfeedback_shannon(S, 2.0, 256) - 1e-9


def test_solution_invariants():
    prob = SpectralProblem(AR1(0.5).psd(), White(0.2).psd(), 3.0, taps=4, grid=256)
    sol = noisy_spectral_bound(prob)
    assert np.all(sol.S_s_samples >= 0)
    assert sol.power_used <= prob.P * (1 + 1e-8)
    assert 0 <= sol.filter_power_fraction < 1
    assert len(sol.seed_values) == 8
    assert sol.value_bits == pytest.approx(max(sol.seed_values), abs=1e-12)


def test_start_points_are_deterministic():
    a, b = spectral.start_points(5), spectral.start_points(5)
    assert len(a) == 8
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert a[1][0] == -0.5


def test_perturbing_white_optimum_only_lowers_score():
    prob = SpectralProblem(White(1.0).psd(), White(0.25).psd(), 10.0, taps=3, grid=256)
    base = prob.score(np.zeros(3))[0]
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert prob.score(rng.normal(0, 0.05, 3))[0] <= base + 1e-12


@pytest.mark.parametrize("kwargs", [dict(P=0.0), dict(P=1.0, taps=-1), dict(P=1.0, grid=16)])
def test_invalid_problem(kwargs):
    with pytest.raises(ValueError):
        SpectralProblem(White(1.0).psd(), White(1.0).psd(), **kwargs)


@given(st.floats(0.05, 2.0), st.floats(0.1, 30.0))
def test_nonfeedback_scaling(c, P):
    # scaling noise and power together leaves the capacity unchanged
    S = MA1(0.4).psd()
    a = nonfeedback_shannon(S, P, 256)
    b = nonfeedback_shannon(S.scaled(c), c * P, 256)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 50.0))
def test_score_spends_budget(seed, P):
    prob = SpectralProblem(MA1(0.2).psd(), White(0.3).psd(), P, taps=3, grid=128)
    b = np.random.default_rng(seed).uniform(-0.3, 0.3, 3)
    value, cost, level = prob.score(b)
    if np.isfinite(value):
        floor = ((1 + prob.cos_tab @ b) ** 2 + (prob.sin_tab @ b) ** 2) * prob.s_w
        spent = np.dot(prob.weights, np.maximum(0, level - floor)) + cost
        assert spent == pytest.approx(P, rel=1e-10)


def test_infeasible_start_is_pulled_back():
    # the filter alone exceeds the budget at every vertex of the first simplex
    prob = SpectralProblem(White(1.0).psd(), White(1.0).psd(), 0.01, taps=2, grid=128)
    assert not np.isfinite(prob.score(np.array([5.0, 5.0]))[0])
    sol = noisy_spectral_bound(prob, seeds=[np.array([5.0, 5.0]), np.zeros(2)])
    assert np.all(np.isfinite(sol.seed_values))
    assert sol.seed_values[0] == pytest.approx(sol.value_bits, abs=1e-12)
    assert sol.value_bits == pytest.approx(0.5 * np.log2(1.01), abs=1e-9)
