"""Integral-chain differentiator, extended observer and their linear analysis.

Both estimators carry n+1 states for an n-th order plant.  The integral-chain
differentiator injects the output error only into its last equation; the
extended observer (and the classical high-gain differentiator used for
comparison) corrects every equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import kernel
from .errors import InvalidArgumentError
from .numkit import Polynomial, min_decay_rate, observer_noise_tf, routh_hurwitz


@dataclass(frozen=True)
class EstimatorGains:
    """Order n, singular-perturbation parameter epsilon and gains a_1..a_{n+1}."""

    n: int
    epsilon: float
    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if self.n < 0:
            raise InvalidArgumentError("estimator order must be >= 0")
        if len(a) != self.n + 1:
            raise InvalidArgumentError(f"need {self.n + 1} gains a_1..a_(n+1), got {len(a)}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if any(v <= 0 or not math.isfinite(v) for v in a):
            raise InvalidArgumentError("gains a_i must be positive")
        if not routh_hurwitz(self.polynomial()):
            raise InvalidArgumentError(f"s^(n+1) + a_(n+1) s^n + ... + a_1 is not Hurwitz for a={a}")

    def polynomial(self) -> Polynomial:
        return Polynomial.from_gains(self.a)

    def scaled(self) -> np.ndarray:
        """a_i / epsilon^(n+2-i) for i = 1..n+1."""
        n = self.n
        return np.array([self.a[i] / self.epsilon ** (n + 1 - i) for i in range(n + 1)])

    def with_epsilon(self, epsilon: float) -> "EstimatorGains":
        return EstimatorGains(self.n, epsilon, self.a)

    @property
    def a_array(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)


DEFAULT_GAINS = EstimatorGains(n=2, epsilon=0.01, a=(10.0, 10.0, 10.0))


# ---------------------------------------------------------------- kernels

@kernel
def integral_chain_rhs(xhat, y, eps, a, out):
    m = xhat.shape[0]  # n + 1
    for i in range(m - 1):
        out[i] = xhat[i + 1]
    acc = -a[0] / eps ** m * (xhat[0] - y)
    for i in range(1, m):
        acc -= a[i] / eps ** (m - i) * xhat[i]
    out[m - 1] = acc


@kernel
def highgain_rhs(xhat, y, gu, eps, a, out):
    # correction -a_(n+2-i)/eps^i (xhat_1 - y) in every row; gu enters row n
    m = xhat.shape[0]
    err = xhat[0] - y
    for i in range(m):
        nxt = xhat[i + 1] if i + 1 < m else 0.0
        out[i] = nxt - a[m - 1 - i] / eps ** (i + 1) * err
    if m >= 2:
        out[m - 2] += gu


# ---------------------------------------------------------------- public ops

def initial_state(y0: float, gains: EstimatorGains) -> np.ndarray:
    """Startup estimate: first entry matches the first measurement, the rest are zero."""
    x = np.zeros(gains.n + 1)
    x[0] = y0
    return x


def _check_state(state, gains):
    s = np.asarray(state, dtype=float).ravel()
    if s.size != gains.n + 1:
        raise InvalidArgumentError(f"estimator state must have {gains.n + 1} entries, got {s.size}")
    return s


def differentiator_rhs(state, y: float, gains: EstimatorGains) -> np.ndarray:
    s = _check_state(state, gains)
    out = np.empty_like(s)
    integral_chain_rhs(s, float(y), gains.epsilon, gains.a_array, out)
    return out


def observer_rhs(state, y: float, u: float, g_hat: float, gains: EstimatorGains) -> np.ndarray:
    """Extended observer; ``g_hat`` is the input gain evaluated at the estimate."""
    s = _check_state(state, gains)
    out = np.empty_like(s)
    highgain_rhs(s, float(y), float(g_hat) * float(u), gains.epsilon, gains.a_array, out)
    return out


def classical_rhs(state, y: float, gains: EstimatorGains) -> np.ndarray:
    """Classical linear high-gain differentiator: the observer's linear part with no input term."""
    s = _check_state(state, gains)
    out = np.empty_like(s)
    highgain_rhs(s, float(y), 0.0, gains.epsilon, gains.a_array, out)
    return out


def uncertainty_from_differentiator(xhat_last: float, g_hat: float, u: float) -> float:
    return xhat_last - g_hat * u


def integral_chain_matrices(gains: EstimatorGains):
    """State-space (A, L) with xhat' = A xhat + L y for the integral-chain differentiator."""
    m = gains.n + 1
    a = np.zeros((m, m))
    a[np.arange(m - 1), np.arange(1, m)] = 1.0
    a[-1, :] = -gains.scaled()
    l = np.zeros(m)
    l[-1] = gains.scaled()[0]
    return a, l


def highgain_matrices(gains: EstimatorGains):
    """(A, L) for the classical high-gain structure (also the observer error matrix)."""
    m = gains.n + 1
    eps = gains.epsilon
    col = np.array([gains.a[m - 1 - i] / eps ** (i + 1) for i in range(m)])
    a = np.zeros((m, m))
    a[np.arange(m - 1), np.arange(1, m)] = 1.0
    a[:, 0] -= col
    return a, col.copy()


def _denominator(gains: EstimatorGains, s: complex) -> complex:
    # s^(n+1) + (a_(n+1)/eps) s^n + ... + a_1/eps^(n+1), Horner from the top
    sc = gains.scaled()
    acc = 1.0 + 0j
    for coef in sc[::-1]:
        acc = acc * s + coef
    return acc


def freq_response(gains: EstimatorGains, channel: int, omega: float) -> complex:
    """H_i(j omega) = (a_1/eps^(n+1)) (j omega)^(i-1) / D(j omega) for channel i = 1..n+1."""
    if not 1 <= channel <= gains.n + 1:
        raise InvalidArgumentError(f"channel {channel} outside 1..{gains.n + 1}")
    s = 1j * float(omega)
    return complex(gains.scaled()[0] * s ** (channel - 1) / _denominator(gains, s))


def noise_channel_compare(gains: EstimatorGains, omega: float, channel: int):
    """|H(j omega)| on one channel for the integral-chain and classical high-gain structures."""
    a_ic, l_ic = integral_chain_matrices(gains)
    a_hg, l_hg = highgain_matrices(gains)
    return (abs(observer_noise_tf(a_ic, l_ic, channel, omega)),
            abs(observer_noise_tf(a_hg, l_hg, channel, omega)))


@dataclass(frozen=True)
class ObserverErrorBoundInputs:
    decay: float
    forcing_bound: float
    z0_norm: float
    epsilon: float

    def __post_init__(self):
        for name in ("decay", "forcing_bound", "epsilon"):
            v = getattr(self, name)
            if not v > 0:
                raise InvalidArgumentError(f"{name} must be positive, got {v}")
        if not self.z0_norm >= 0:
            raise InvalidArgumentError(f"z0_norm must be non-negative, got {self.z0_norm}")


def observer_error_bound(inp: ObserverErrorBoundInputs, t: float) -> float:
    """exp(-(lam/eps) t) |z0| + (eps l_B / lam)(1 - exp(-(lam/eps) t))."""
    decay = math.exp(-inp.decay / inp.epsilon * t)
    return decay * inp.z0_norm + inp.epsilon * inp.forcing_bound / inp.decay * (1.0 - decay)


def observer_decay_rate(gains: EstimatorGains) -> float:
    """Continuous-time decay rate lam/eps of the estimator error dynamics."""
    return min_decay_rate(gains.polynomial()) / gains.epsilon
