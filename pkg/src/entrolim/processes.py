"""Stationary disturbance models and their per-step conditional entropies.

Four model families:

* ``IID`` -- independent draws from a generalized Gaussian innovation.
* ``GaussARMA`` -- Gaussian ARMA(p, q), d_k = sum phi_i d_{k-i} + w_k
  + sum theta_j w_{k-j}, with stable AR and invertible MA polynomials.
* ``GenGaussAR`` -- finite-order AR driven by generalized Gaussian noise.
* ``VectorGaussAR`` -- first-order vector model d_k = A d_{k-1} + w_k with
  Gaussian innovations.

Sample paths start in steady state: Gaussian models draw their initial
state from the exact stationary distribution (discrete Lyapunov equation on
the filter state), while GenGaussAR runs a burn-in of 10x its effective
memory before emitting samples.

Per-step conditional entropies h(d_k | d_0..d_{k-1}) in bits come from the
Levinson-Durbin recursion on the model autocovariances: for a stationary
Gaussian process the conditional law given k past values is Gaussian with
variance equal to the order-k one-step prediction error P_k, so
h = 0.5 log2(2 pi e P_k).  P_0 is the stationary variance and P_k decreases
monotonically to the innovation variance.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import linalg as sla
from scipy import signal

from .distributions import GeneralizedGaussian, as_rng
from .spectral import SpectralDensity

__all__ = [
    "DisturbanceModel",
    "IID",
    "GaussARMA",
    "GenGaussAR",
    "VectorGaussAR",
    "EntropySchedule",
    "entropy_schedule",
    "levinson_durbin",
    "levinson_ladder",
    "arma_autocovariance",
    "model_from_config",
    "CapacityError",
    "NotAnalyticError",
]

_TWO_PI_E = 2.0 * math.pi * math.e

#: Largest Levinson-Durbin order computed for per-step entropies.  Beyond
#: this the recursion cost is quadratic and the values are indistinguishable
#: from the entropy rate anyway; requests past the cap raise CapacityError.
LEVINSON_HORIZON = 4096


class CapacityError(ValueError):
    """Step index beyond the configured Levinson-Durbin horizon."""


class NotAnalyticError(ValueError):
    """Requested quantity has no closed form for this model; estimate it."""


# ---------------------------------------------------------------------------
# linear-prediction primitives


def levinson_durbin(acov: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Order-``order`` one-step predictor from autocovariances.

    Returns (coeffs, error_variance) where the best linear prediction of
    x_k from the previous ``order`` values is coeffs @ [x_{k-1}, ...,
    x_{k-order}].
    """
    coeffs_by_order, variances = levinson_ladder(acov, order)
    return coeffs_by_order[order], float(variances[order])


def levinson_ladder(
    acov: np.ndarray, order: int
) -> tuple[list[np.ndarray], np.ndarray]:
    """All predictor orders 0..order plus their error variances P_0..P_order.

    ``coeffs[j]`` predicts from the last j values (most recent first).
    P_0 = acov[0]; P_j = P_{j-1} (1 - k_j^2) with reflection coefficient
    k_j.  Fails if the autocovariance sequence is not positive definite.
    """
    acov = np.asarray(acov, dtype=float)
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if acov.size < order + 1:
        raise ValueError(
            f"need {order + 1} autocovariances for order {order}, got {acov.size}"
        )
    variances = np.empty(order + 1)
    variances[0] = acov[0]
    if acov[0] <= 0.0:
        raise ValueError(f"lag-0 autocovariance must be positive, got {acov[0]!r}")
    coeffs: list[np.ndarray] = [np.zeros(0)]
    prev = np.zeros(0)
    for j in range(1, order + 1):
        if variances[j - 1] <= 0.0:
            raise ValueError(
                f"prediction variance hit {variances[j - 1]!r} at order {j - 1}; "
                "autocovariances are not positive definite"
            )
        reflect = acov[j] - prev @ acov[j - 1 : 0 : -1]
        reflect /= variances[j - 1]
        cur = np.empty(j)
        cur[: j - 1] = prev - reflect * prev[::-1]
        cur[j - 1] = reflect
        variances[j] = variances[j - 1] * (1.0 - reflect**2)
        coeffs.append(cur)
        prev = cur
    return coeffs, variances


def arma_autocovariance(
    ar: tuple[float, ...], ma: tuple[float, ...], sigma2: float, max_lag: int
) -> np.ndarray:
    """Autocovariances R(0..max_lag) of a stable, invertible ARMA model.

    Solves the first max(p, q+1) extended Yule-Walker equations as a linear
    system, then recurses R(j) = sum phi_i R(j-i) for the remaining lags.
    """
    p, q = len(ar), len(ma)
    theta = np.concatenate(([1.0], np.asarray(ma, dtype=float)))
    # MA(inf) weights psi_0..psi_q (only the first q+1 enter the equations).
    psi = np.zeros(q + 1)
    psi[0] = 1.0
    for j in range(1, q + 1):
        psi[j] = theta[j]
        for i in range(1, min(j, p) + 1):
            psi[j] += ar[i - 1] * psi[j - i]
    # Cross terms c_j = sigma2 * sum_{i=j..q} theta_i psi_{i-j}; zero past q.
    cross = np.zeros(max(p, q) + 1)
    for j in range(q + 1):
        cross[j] = sigma2 * sum(theta[i] * psi[i - j] for i in range(j, q + 1))
    # Equations R(j) - sum_i ar_i R(|j-i|) = c_j for j = 0..p close over the
    # unknowns R(0..p); later lags follow by direct recursion.
    system = np.zeros((p + 1, p + 1))
    for j in range(p + 1):
        system[j, j] += 1.0
        for i in range(1, p + 1):
            system[j, abs(j - i)] -= ar[i - 1]
    head = np.linalg.solve(system, cross[: p + 1])
    out = np.empty(max_lag + 1)
    count = min(p + 1, max_lag + 1)
    out[:count] = head[:count]
    for j in range(p + 1, max_lag + 1):
        val = cross[j] if j < len(cross) else 0.0
        for i in range(1, p + 1):
            val += ar[i - 1] * out[j - i]
        out[j] = val
    return out


def _poly_roots_outside(coeffs_ascending: np.ndarray, what: str) -> None:
    """Require all roots of 1 + c_1 z + ... + c_n z^n outside the unit circle."""
    if len(coeffs_ascending) <= 1:
        return
    roots = npoly.polyroots(coeffs_ascending)
    if roots.size and np.min(np.abs(roots)) <= 1.0 + 1e-12:
        worst = np.min(np.abs(roots))
        raise ValueError(
            f"{what} polynomial has a root with modulus {worst:.6g} <= 1; "
            "the model would not be stationary with a proper innovation "
            "representation"
        )


def _rational_spectrum(sigma2: float, ar: tuple, ma: tuple) -> SpectralDensity:
    phi = np.concatenate(([1.0], -np.asarray(ar, dtype=float)))
    theta = np.concatenate(([1.0], np.asarray(ma, dtype=float)))

    def evaluate(omega):
        z = np.exp(-1j * np.asarray(omega, dtype=float))
        num = np.abs(npoly.polyval(z, theta)) ** 2
        den = np.abs(npoly.polyval(z, phi)) ** 2
        out = sigma2 * num / den
        if np.isscalar(omega):
            return float(out)
        return out

    return SpectralDensity(evaluate=evaluate, rational=(sigma2, tuple(ar), tuple(ma)))


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = cov for a (possibly singular) PSD matrix."""
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


# ---------------------------------------------------------------------------
# model classes


class DisturbanceModel(abc.ABC):
    """Common surface for the stationary disturbance families."""

    @property
    @abc.abstractmethod
    def dim(self) -> int: ...

    @property
    @abc.abstractmethod
    def descriptor(self) -> str: ...

    @abc.abstractmethod
    def sample_path(self, length: int, seed) -> np.ndarray:
        """Stationary path of shape (length,) or (length, dim)."""

    @abc.abstractmethod
    def conditional_entropy_bits(self, k: int) -> float:
        """h(d_k | d_0..d_{k-1}) in bits under the stationary start."""

    @abc.abstractmethod
    def entropy_rate_bits(self) -> float:
        """Limit of the per-step conditional entropy, in bits."""

    @abc.abstractmethod
    def variance(self) -> float:
        """Stationary per-step variance (scalar models)."""

    @abc.abstractmethod
    def effective_memory(self) -> int:
        """Rough correlation length in steps; 0 for iid."""

    def autocovariance(self, max_lag: int) -> np.ndarray:
        raise NotAnalyticError(f"{type(self).__name__} has no autocovariance routine")

    def power_spectrum(self) -> SpectralDensity:
        raise NotAnalyticError(f"{type(self).__name__} has no spectral routine")

    @staticmethod
    def _check_length(length: int) -> None:
        if length < 1:
            raise ValueError(f"path length must be >= 1, got {length}")

    @staticmethod
    def _check_step(k: int) -> None:
        if k < 0:
            raise ValueError(f"step index must be >= 0, got {k}")
        if k > LEVINSON_HORIZON:
            raise CapacityError(
                f"step {k} beyond the Levinson horizon {LEVINSON_HORIZON}; "
                "use entropy_rate_bits() for the tail"
            )


@dataclass(frozen=True)
class IID(DisturbanceModel):
    """Independent generalized Gaussian draws (no temporal structure)."""

    innovation: GeneralizedGaussian

    @property
    def dim(self) -> int:
        return 1

    @property
    def descriptor(self) -> str:
        return f"iid[{self.innovation.descriptor}]"

    def sample_path(self, length, seed):
        self._check_length(length)
        return self.innovation.sample(length, seed)

    def conditional_entropy_bits(self, k):
        self._check_step(k)
        return self.innovation.entropy_bits()

    def entropy_rate_bits(self):
        return self.innovation.entropy_bits()

    def variance(self):
        return self.innovation.variance()

    def effective_memory(self):
        return 0

    def autocovariance(self, max_lag):
        out = np.zeros(max_lag + 1)
        out[0] = self.innovation.variance()
        return out

    def power_spectrum(self):
        level = self.innovation.variance()
        return SpectralDensity(
            evaluate=lambda omega: np.full_like(
                np.asarray(omega, dtype=float), level
            ),
            rational=(level, (), ()),
        )


@dataclass(frozen=True)
class GaussARMA(DisturbanceModel):
    """Gaussian ARMA(p, q): d_k = sum ar_i d_{k-i} + w_k + sum ma_j w_{k-j}.

    The AR polynomial 1 - sum ar_i z^i must have all roots outside the unit
    circle (stationarity) and the MA polynomial 1 + sum ma_j z^j likewise
    (invertibility): the entropy rate, Szego integral, and predictor all
    presume the innovation representation, which a unit-circle or inside
    root would silently break.
    """

    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    innovation_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(b) for b in self.ma))
        if not self.innovation_variance > 0.0:
            raise ValueError(
                f"innovation variance must be positive, got {self.innovation_variance!r}"
            )
        _poly_roots_outside(np.concatenate(([1.0], -np.asarray(self.ar))), "AR")
        _poly_roots_outside(np.concatenate(([1.0], np.asarray(self.ma))), "MA")

    @property
    def dim(self) -> int:
        return 1

    @property
    def descriptor(self) -> str:
        return (
            f"gauss_arma[ar={list(self.ar)}, ma={list(self.ma)}, "
            f"var={self.innovation_variance:g}]"
        )

    def sample_path(self, length, seed):
        self._check_length(length)
        rng = as_rng(seed)
        p, q = len(self.ar), len(self.ma)
        sigma = math.sqrt(self.innovation_variance)
        n_state = max(p, q)
        if n_state == 0:
            return rng.normal(0.0, sigma, size=length)
        # Direct-form-II-transposed filter state s obeys
        # s_k = A s_{k-1} + B w_k; draw s_{-1} from its stationary law so the
        # emitted path is stationary from the very first sample.
        state_cov = _filter_state_cov(self)
        init = _psd_factor(state_cov) @ rng.standard_normal(n_state)
        w = rng.normal(0.0, sigma, size=length)
        a_poly = np.concatenate(([1.0], -np.asarray(self.ar)))
        b_poly = np.concatenate(([1.0], np.asarray(self.ma)))
        path, _ = signal.lfilter(b_poly, a_poly, w, zi=init)
        return path

    def conditional_entropy_bits(self, k):
        self._check_step(k)
        variances = _prediction_variances(self, k)
        return 0.5 * math.log2(_TWO_PI_E * variances[k])

    def entropy_rate_bits(self):
        return 0.5 * math.log2(_TWO_PI_E * self.innovation_variance)

    def variance(self):
        return float(self.autocovariance(0)[0])

    def autocovariance(self, max_lag):
        if max_lag < 0:
            raise ValueError(f"max_lag must be >= 0, got {max_lag}")
        return _arma_acov_cached(self, max_lag).copy()

    def power_spectrum(self):
        return _rational_spectrum(self.innovation_variance, self.ar, self.ma)

    def effective_memory(self):
        return _ar_memory(self.ar, len(self.ma))


@dataclass(frozen=True)
class GenGaussAR(DisturbanceModel):
    """Finite-order AR driven by generalized Gaussian innovations.

    Only second-order statistics (autocovariance, spectrum) and the
    innovation entropy are analytic.  Conditional entropies below the AR
    order depend on non-Gaussian marginals and raise NotAnalyticError; the
    verification harness falls back to estimation there.
    """

    ar: tuple[float, ...]
    innovation: GeneralizedGaussian

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        _poly_roots_outside(np.concatenate(([1.0], -np.asarray(self.ar))), "AR")

    @property
    def dim(self) -> int:
        return 1

    @property
    def descriptor(self) -> str:
        return f"gengauss_ar[ar={list(self.ar)}, {self.innovation.descriptor}]"

    def sample_path(self, length, seed):
        self._check_length(length)
        rng = as_rng(seed)
        burn = 10 * self.effective_memory()
        w = self.innovation.sample(length + burn, rng)
        if not self.ar:
            return w
        a_poly = np.concatenate(([1.0], -np.asarray(self.ar)))
        path = signal.lfilter([1.0], a_poly, w)
        return path[burn:]

    def conditional_entropy_bits(self, k):
        self._check_step(k)
        if k < len(self.ar):
            raise NotAnalyticError(
                f"conditional entropy at step {k} < AR order {len(self.ar)} "
                "has no closed form for non-Gaussian innovations; estimate it "
                "from sample paths"
            )
        return self.innovation.entropy_bits()

    def entropy_rate_bits(self):
        return self.innovation.entropy_bits()

    def variance(self):
        return float(self.autocovariance(0)[0])

    def autocovariance(self, max_lag):
        if max_lag < 0:
            raise ValueError(f"max_lag must be >= 0, got {max_lag}")
        return arma_autocovariance(self.ar, (), self.innovation.variance(), max_lag)

    def power_spectrum(self):
        return _rational_spectrum(self.innovation.variance(), self.ar, ())

    def effective_memory(self):
        return _ar_memory(self.ar, 0)


@dataclass(frozen=True)
class VectorGaussAR(DisturbanceModel):
    """First-order vector model d_k = A d_{k-1} + w_k, w_k ~ N(0, Q).

    A must have spectral radius < 1 and Q must be symmetric positive
    definite.
    """

    transition: tuple[tuple[float, ...], ...]
    innovation_covariance: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.transition, dtype=float))
        q = np.atleast_2d(np.asarray(self.innovation_covariance, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"transition matrix must be square, got {a.shape}")
        if q.shape != a.shape:
            raise ValueError(
                f"innovation covariance shape {q.shape} does not match "
                f"transition shape {a.shape}"
            )
        radius = np.max(np.abs(np.linalg.eigvals(a)))
        if radius >= 1.0 - 1e-12:
            raise ValueError(
                f"transition spectral radius {radius:.6g} >= 1; not stationary"
            )
        if not np.allclose(q, q.T, rtol=0.0, atol=1e-12):
            raise ValueError("innovation covariance must be symmetric")
        if np.linalg.eigvalsh(q).min() <= 0.0:
            raise ValueError("innovation covariance must be positive definite")
        object.__setattr__(self, "transition", tuple(map(tuple, a.tolist())))
        object.__setattr__(self, "innovation_covariance", tuple(map(tuple, q.tolist())))

    @property
    def dim(self) -> int:
        return len(self.transition)

    @property
    def descriptor(self) -> str:
        return f"vector_gauss_ar[m={self.dim}]"

    @property
    def transition_matrix(self) -> np.ndarray:
        return np.asarray(self.transition, dtype=float)

    @property
    def innovation_covariance_matrix(self) -> np.ndarray:
        return np.asarray(self.innovation_covariance, dtype=float)

    def stationary_covariance(self) -> np.ndarray:
        return _vector_stationary_cov(self).copy()

    def sample_path(self, length, seed):
        self._check_length(length)
        rng = as_rng(seed)
        a = self.transition_matrix
        chol = np.linalg.cholesky(self.innovation_covariance_matrix)
        prev = _psd_factor(_vector_stationary_cov(self)) @ rng.standard_normal(self.dim)
        noise = rng.standard_normal((length, self.dim)) @ chol.T
        out = np.empty((length, self.dim))
        for k in range(length):
            prev = a @ prev + noise[k]
            out[k] = prev
        return out

    def conditional_entropy_bits(self, k):
        self._check_step(k)
        cov = (
            _vector_stationary_cov(self)
            if k == 0
            else self.innovation_covariance_matrix
        )
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            raise ValueError("covariance determinant not positive")
        return 0.5 * (self.dim * math.log2(_TWO_PI_E) + logdet / math.log(2.0))

    def entropy_rate_bits(self):
        return self.conditional_entropy_bits(1)

    def variance(self):
        raise NotAnalyticError(
            "scalar variance undefined for a vector model; use "
            "stationary_covariance()"
        )

    def autocovariance(self, max_lag):
        """Matrix autocovariances R(j) = A^j Sigma, shape (max_lag+1, m, m)."""
        if max_lag < 0:
            raise ValueError(f"max_lag must be >= 0, got {max_lag}")
        a = self.transition_matrix
        out = np.empty((max_lag + 1, self.dim, self.dim))
        out[0] = _vector_stationary_cov(self)
        for j in range(1, max_lag + 1):
            out[j] = a @ out[j - 1]
        return out

    def effective_memory(self):
        radius = np.max(np.abs(np.linalg.eigvals(self.transition_matrix)))
        if radius <= 0.0:
            return 0
        return max(1, math.ceil(-1.0 / math.log(radius)))


def _ar_memory(ar: tuple[float, ...], ma_order: int) -> int:
    if not ar:
        return ma_order
    roots = npoly.polyroots(np.concatenate(([1.0], -np.asarray(ar))))
    radius = float(np.max(1.0 / np.abs(roots)))
    decay = max(1, math.ceil(-1.0 / math.log(radius))) if radius > 0 else 1
    return max(len(ar), ma_order, decay)


# cached heavy pieces, keyed by the frozen (hashable) model dataclasses


@lru_cache(maxsize=128)
def _arma_acov_cached(model: GaussARMA, max_lag: int) -> np.ndarray:
    return arma_autocovariance(
        model.ar, model.ma, model.innovation_variance, max_lag
    )


@lru_cache(maxsize=128)
def _prediction_variances(model: GaussARMA, order: int) -> np.ndarray:
    acov = _arma_acov_cached(model, order)
    _, variances = levinson_ladder(acov, order)
    return variances


@lru_cache(maxsize=64)
def _filter_state_cov(model: GaussARMA) -> np.ndarray:
    """Stationary covariance of the lfilter (DF2T) internal state."""
    p, q = len(model.ar), len(model.ma)
    n = max(p, q)
    phi = np.zeros(n)
    phi[:p] = model.ar
    theta = np.zeros(n)
    theta[:q] = model.ma
    a_mat = np.zeros((n, n))
    a_mat[:, 0] = phi
    for i in range(n - 1):
        a_mat[i, i + 1] = 1.0
    b_vec = theta + phi
    q_mat = model.innovation_variance * np.outer(b_vec, b_vec)
    return sla.solve_discrete_lyapunov(a_mat, q_mat)


@lru_cache(maxsize=64)
def _vector_stationary_cov(model: VectorGaussAR) -> np.ndarray:
    return sla.solve_discrete_lyapunov(
        model.transition_matrix, model.innovation_covariance_matrix
    )


# ---------------------------------------------------------------------------
# entropy schedules


@dataclass(frozen=True)
class EntropySchedule:
    """Per-step conditional entropies h_0..h_{K-1} plus their limit."""

    h_bits: np.ndarray
    entropy_rate_bits: float


def entropy_schedule(model: DisturbanceModel, horizon: int) -> EntropySchedule:
    """Evaluate conditional_entropy_bits at 0..horizon-1 (analytic models)."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    h = np.array([model.conditional_entropy_bits(k) for k in range(horizon)])
    return EntropySchedule(h_bits=h, entropy_rate_bits=model.entropy_rate_bits())


# ---------------------------------------------------------------------------
# config parsing


def _innovation_from_config(spec: dict, field: str) -> GeneralizedGaussian:
    if not isinstance(spec, dict):
        raise ValueError(f"{field}: expected an object, got {type(spec).__name__}")
    family = spec.get("family", "gg")
    if family == "gaussian":
        if "variance" not in spec:
            raise ValueError(f"{field}: gaussian innovation needs 'variance'")
        return GeneralizedGaussian.gaussian(math.sqrt(float(spec["variance"])))
    if family == "gg":
        try:
            p_raw = spec["p"]
            mu = float(spec["mu"])
        except KeyError as missing:
            raise ValueError(f"{field}: gg innovation needs 'p' and 'mu'") from missing
        p = math.inf if p_raw in ("inf", "Infinity") else float(p_raw)
        return GeneralizedGaussian(p, mu)
    raise ValueError(f"{field}: unknown innovation family {family!r}")


def model_from_config(spec: dict) -> DisturbanceModel:
    """Build a disturbance model from its JSON-config dictionary.

    Recognized kinds: iid, gauss_arma, gengauss_ar, vector_gauss_ar.  Field
    errors raise ValueError with the offending field named.
    """
    if not isinstance(spec, dict):
        raise ValueError(f"model spec must be an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind == "iid":
        return IID(_innovation_from_config(spec.get("innovation", {}), "innovation"))
    if kind == "gauss_arma":
        innovation = spec.get("innovation", {"family": "gaussian", "variance": 1.0})
        if innovation.get("family", "gaussian") != "gaussian":
            raise ValueError("innovation: gauss_arma takes a gaussian innovation")
        variance = float(innovation.get("variance", 1.0))
        return GaussARMA(
            ar=tuple(spec.get("ar", ())),
            ma=tuple(spec.get("ma", ())),
            innovation_variance=variance,
        )
    if kind == "gengauss_ar":
        return GenGaussAR(
            ar=tuple(spec.get("ar", ())),
            innovation=_innovation_from_config(
                spec.get("innovation", {}), "innovation"
            ),
        )
    if kind == "vector_gauss_ar":
        if "transition" not in spec or "innovation_covariance" not in spec:
            raise ValueError(
                "vector_gauss_ar needs 'transition' and 'innovation_covariance'"
            )
        return VectorGaussAR(
            transition=tuple(map(tuple, spec["transition"])),
            innovation_covariance=tuple(map(tuple, spec["innovation_covariance"])),
        )
    raise ValueError(f"kind: unknown model kind {kind!r}")
