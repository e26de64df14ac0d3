"""Disturbance-model checks.

Autocovariances and prediction-error variances are verified against hand
oracles (Yule-Walker solved by fraction arithmetic, noted inline) and
against long simulated paths; the stationary start is checked by comparing
the distribution of the very first sample with the analytic marginal.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entrolim import (
    IID,
    CapacityError,
    GaussARMA,
    GenGaussAR,
    GeneralizedGaussian,
    NotAnalyticError,
    VectorGaussAR,
    arma_autocovariance,
    entropy_schedule,
    levinson_durbin,
    levinson_ladder,
    model_from_config,
)

TWO_PI_E = 2.0 * math.pi * math.e


# ---------------------------------------------------------------------------
# autocovariance solver


def test_ar1_autocovariance():
    # R(j) = sigma^2 a^j / (1 - a^2)
    r = arma_autocovariance((0.8,), (), 1.0, 4)
    base = 1.0 / (1.0 - 0.64)
    assert np.allclose(r, base * 0.8 ** np.arange(5), rtol=1e-12)


def test_ma1_autocovariance():
    r = arma_autocovariance((), (0.4,), 2.0, 3)
    assert r[0] == pytest.approx(2.0 * (1 + 0.16), rel=1e-12)
    assert r[1] == pytest.approx(2.0 * 0.4, rel=1e-12)
    assert r[2] == 0.0
    assert r[3] == 0.0


def test_arma11_autocovariance():
    # R(0) = s2 (1 + 2 phi th + th^2)/(1 - phi^2),
    # R(1) = s2 (1 + phi th)(phi + th)/(1 - phi^2), R(j) = phi R(j-1)
    r = arma_autocovariance((0.5,), (0.3,), 2.0, 3)
    assert r[0] == pytest.approx(3.706666666666667, rel=1e-12)
    assert r[1] == pytest.approx(2.453333333333333, rel=1e-12)
    assert r[2] == pytest.approx(1.2266666666666666, rel=1e-12)
    assert r[3] == pytest.approx(0.6133333333333333, rel=1e-12)


def test_ar2_autocovariance_fractions():
    # Yule-Walker for ar=(0.5, 0.3), s2=1 gives R0=175/78, R1=125/78, R2=115/78
    r = arma_autocovariance((0.5, 0.3), (), 1.0, 2)
    assert r[0] == pytest.approx(175.0 / 78.0, rel=1e-12)
    assert r[1] == pytest.approx(125.0 / 78.0, rel=1e-12)
    assert r[2] == pytest.approx(115.0 / 78.0, rel=1e-12)


def test_iid_autocovariance():
    r = arma_autocovariance((), (), 1.7, 2)
    assert r[0] == pytest.approx(1.7)
    assert r[1] == 0.0


def test_autocovariance_matches_simulation():
    model = GaussARMA(ar=(0.5,), ma=(0.3,), innovation_variance=2.0)
    path = model.sample_path(400_000, seed=31)
    want = model.autocovariance(2)
    for lag in range(3):
        emp = float(np.mean(path[lag:] * path[: path.size - lag]))
        assert emp == pytest.approx(want[lag], rel=0.02)


# ---------------------------------------------------------------------------
# Levinson-Durbin


def test_levinson_recovers_ar_taps():
    r = arma_autocovariance((0.5, 0.3), (), 1.0, 2)
    coeffs, err = levinson_durbin(r, 2)
    assert np.allclose(coeffs, [0.5, 0.3], rtol=1e-12)
    assert err == pytest.approx(1.0, rel=1e-12)


def test_levinson_ladder_variances():
    # hand recursion: P0 = 175/78, P1 = P0 (1 - (5/7)^2) = 100/91, P2 = 1
    r = arma_autocovariance((0.5, 0.3), (), 1.0, 2)
    ladder, variances = levinson_ladder(r, 2)
    assert variances[0] == pytest.approx(175.0 / 78.0, rel=1e-12)
    assert variances[1] == pytest.approx(100.0 / 91.0, rel=1e-12)
    assert variances[2] == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(ladder[1], [125.0 / 175.0])
    assert np.allclose(ladder[2], [0.5, 0.3], rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(min_value=-0.95, max_value=0.95))
def test_prediction_error_never_increases(a):
    r = arma_autocovariance((a,), (0.2,), 1.0, 8)
    _, variances = levinson_ladder(r, 8)
    assert np.all(np.diff(variances) <= 1e-12)
    assert variances[-1] >= 1.0 - 1e-9  # innovation variance is the floor


# ---------------------------------------------------------------------------
# GaussARMA


def test_entropy_schedule_ar2():
    model = GaussARMA(ar=(0.5, 0.3))
    sched = entropy_schedule(model, 5)
    # h_k = 0.5 log2(2 pi e P_k) with P = [175/78, 100/91, 1, 1, 1]
    assert sched.h_bits[0] == pytest.approx(2.630000031665681, abs=1e-12)
    assert sched.h_bits[1] == pytest.approx(2.1151263599686554, abs=1e-12)
    assert np.allclose(sched.h_bits[2:], 2.047095585180641, atol=1e-12)
    assert sched.entropy_rate_bits == pytest.approx(2.047095585180641, abs=1e-12)
    assert np.all(np.diff(sched.h_bits) <= 1e-12)


def test_conditional_entropy_k0_is_marginal():
    model = GaussARMA(ar=(0.9,))
    var0 = 1.0 / (1.0 - 0.81)
    assert model.conditional_entropy_bits(0) == pytest.approx(
        0.5 * math.log2(TWO_PI_E * var0), abs=1e-12
    )


def test_stationary_start():
    # the first emitted sample must already follow the stationary marginal
    model = GaussARMA(ar=(0.9,), innovation_variance=1.0)
    first = np.array([model.sample_path(1, seed=s)[0] for s in range(4000)])
    var0 = 1.0 / (1.0 - 0.81)
    se = var0 * math.sqrt(2.0 / 4000)
    assert abs(np.var(first) - var0) < 4 * se
    assert abs(np.mean(first)) < 4 * math.sqrt(var0 / 4000)


def test_stationary_start_arma11():
    model = GaussARMA(ar=(0.5,), ma=(0.3,), innovation_variance=2.0)
    first = np.array([model.sample_path(1, seed=s)[0] for s in range(4000)])
    var0 = 3.706666666666667
    se = var0 * math.sqrt(2.0 / 4000)
    assert abs(np.var(first) - var0) < 4 * se


def test_sample_path_reproducible():
    model = GaussARMA(ar=(0.4, 0.2), ma=(0.1,))
    assert np.array_equal(model.sample_path(64, 3), model.sample_path(64, 3))


def test_rejects_unstable_and_noninvertible():
    with pytest.raises(ValueError, match="AR"):
        GaussARMA(ar=(1.05,))
    with pytest.raises(ValueError, match="MA"):
        GaussARMA(ma=(1.2,))
    with pytest.raises(ValueError, match="AR"):
        GaussARMA(ar=(0.5, 0.5))  # root on the unit circle
    with pytest.raises(ValueError, match="variance"):
        GaussARMA(innovation_variance=0.0)


def test_capacity_error_past_horizon():
    model = GaussARMA(ar=(0.9,))
    with pytest.raises(CapacityError):
        model.conditional_entropy_bits(4097)
    with pytest.raises(CapacityError):
        model.conditional_entropy_bits(50_000)


# ---------------------------------------------------------------------------
# GenGaussAR


def test_gengauss_ar_entropy_and_autocovariance():
    innov = GeneralizedGaussian.uniform(1.0)
    model = GenGaussAR(ar=(0.9,), innovation=innov)
    assert model.entropy_rate_bits() == pytest.approx(1.0, abs=1e-14)
    base = innov.variance() / (1.0 - 0.81)
    r = model.autocovariance(2)
    assert r[0] == pytest.approx(base, rel=1e-12)
    assert r[1] == pytest.approx(base * 0.9, rel=1e-12)
    assert model.conditional_entropy_bits(1) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(NotAnalyticError):
        model.conditional_entropy_bits(0)


def test_gengauss_ar_path_variance():
    innov = GeneralizedGaussian.laplace(0.5)
    model = GenGaussAR(ar=(0.6,), innovation=innov)
    path = model.sample_path(300_000, seed=12)
    assert float(np.var(path)) == pytest.approx(model.variance(), rel=0.03)


# ---------------------------------------------------------------------------
# VectorGaussAR


VEC_A = ((0.5, 0.1), (0.0, 0.3))
VEC_Q = ((1.0, 0.2), (0.2, 0.5))


def test_vector_stationary_covariance():
    model = VectorGaussAR(transition=VEC_A, innovation_covariance=VEC_Q)
    # oracle: Lyapunov series sum_j A^j Q (A^T)^j, geometric convergence
    a = np.array(VEC_A)
    term = np.array(VEC_Q)
    total = np.zeros((2, 2))
    for _ in range(200):
        total += term
        term = a @ term @ a.T
    assert np.allclose(model.stationary_covariance(), total, atol=1e-12)


def test_vector_conditional_entropies():
    model = VectorGaussAR(transition=VEC_A, innovation_covariance=VEC_Q)
    assert model.conditional_entropy_bits(0) == pytest.approx(
        3.826963367576797, abs=1e-12
    )
    # k >= 1 conditions on the full past: innovation covariance determinant
    assert model.conditional_entropy_bits(1) == pytest.approx(
        3.534044053502426, abs=1e-12
    )
    assert model.conditional_entropy_bits(7) == model.conditional_entropy_bits(1)
    assert model.entropy_rate_bits() == pytest.approx(3.534044053502426, abs=1e-12)


def test_vector_sample_second_moments():
    model = VectorGaussAR(transition=VEC_A, innovation_covariance=VEC_Q)
    path = model.sample_path(200_000, seed=8)
    hat = path.T @ path / path.shape[0]
    assert np.allclose(hat, model.stationary_covariance(), atol=0.03)


def test_vector_autocovariance_lag1():
    model = VectorGaussAR(transition=VEC_A, innovation_covariance=VEC_Q)
    r = model.autocovariance(1)
    want = np.array(VEC_A) @ model.stationary_covariance()
    assert np.allclose(r[1], want, atol=1e-12)


def test_vector_validation():
    with pytest.raises(ValueError):
        VectorGaussAR(transition=((1.0, 0.0), (0.0, 0.5)), innovation_covariance=VEC_Q)
    with pytest.raises(ValueError):
        VectorGaussAR(
            transition=VEC_A, innovation_covariance=((1.0, 2.0), (2.0, 1.0))
        )
    with pytest.raises(NotAnalyticError):
        VectorGaussAR(transition=VEC_A, innovation_covariance=VEC_Q).variance()


# ---------------------------------------------------------------------------
# config parsing


def test_model_from_config_round_trip():
    model = model_from_config(
        {"kind": "gauss_arma", "ar": [0.5], "ma": [0.3],
         "innovation": {"family": "gaussian", "variance": 2.0}}
    )
    assert isinstance(model, GaussARMA)
    assert model.ar == (0.5,)
    assert model.innovation_variance == 2.0

    iid = model_from_config(
        {"kind": "iid", "innovation": {"family": "gg", "p": "inf", "mu": 1.0}}
    )
    assert isinstance(iid, IID)
    assert math.isinf(iid.innovation.power)

    vec = model_from_config(
        {"kind": "vector_gauss_ar", "transition": [[0.5, 0.0], [0.0, 0.5]],
         "innovation_covariance": [[1.0, 0.0], [0.0, 1.0]]}
    )
    assert isinstance(vec, VectorGaussAR)
    assert vec.dim == 2


def test_model_from_config_field_errors():
    with pytest.raises(ValueError, match="kind"):
        model_from_config({"kind": "garch"})
    with pytest.raises(ValueError, match="innovation"):
        model_from_config({"kind": "iid", "innovation": {"family": "cauchy"}})
    with pytest.raises(ValueError, match="innovation"):
        model_from_config({"kind": "gengauss_ar", "ar": [0.5],
                           "innovation": {"family": "gg", "p": 1.0}})
    with pytest.raises(ValueError, match="transition"):
        model_from_config({"kind": "vector_gauss_ar"})


def test_effective_memory_ordering():
    slow = GaussARMA(ar=(0.99,))
    fast = GaussARMA(ar=(0.2,))
    assert slow.effective_memory() > fast.effective_memory()
    assert IID(GeneralizedGaussian.gaussian(1.0)).effective_memory() == 0
