"""Tracking control laws and their error-bound diagnostics.

All laws share u = (1/g_used) [-f_hat + y_d^(n) - K^T e] with e = x - y_d
(or its estimate).  The laws differ only in where f_hat, e and g come from.
The input gain is floored at ``g_floor`` in magnitude before dividing and the
result is clipped to |u| <= l_u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._jit import kernel
from .errors import InvalidArgumentError
from .numkit import Polynomial, min_decay_rate, routh_hurwitz
from .plant import PlantModel, Reference, DEFAULT_REFERENCE

DEFAULT_L_U = 50.0
FLOOR_FRACTION = 0.1


@kernel
def floor_gain(g, g_floor):
    if abs(g) >= g_floor:
        return g
    return g_floor if g >= 0.0 else -g_floor


@kernel
def saturate(u, l_u):
    if u > l_u:
        return l_u
    if u < -l_u:
        return -l_u
    return u


@kernel
def control_law(f_hat, ydn, k, e, g, g_floor, l_u):
    """Returns (u, saturated, floored, g_used)."""
    g_used = floor_gain(g, g_floor)
    acc = -f_hat + ydn
    for i in range(k.shape[0]):
        acc -= k[i] * e[i]
    raw = acc / g_used
    u = saturate(raw, l_u)
    return u, u != raw, g_used != g, g_used


@dataclass(frozen=True)
class GainVector:
    """k_1..k_n such that s^n + k_n s^(n-1) + ... + k_1 is Hurwitz."""

    k: tuple

    def __post_init__(self):
        k = tuple(float(v) for v in self.k)
        object.__setattr__(self, "k", k)
        if len(k) == 0 or any(not v > 0 for v in k):
            raise InvalidArgumentError("gains must be a non-empty list of positive values")
        if not routh_hurwitz(self.polynomial()):
            raise InvalidArgumentError(f"gain polynomial for K={k} is not Hurwitz")

    def polynomial(self) -> Polynomial:
        return Polynomial.from_gains(self.k)

    def decay_rate(self) -> float:
        return min_decay_rate(self.polynomial())

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float)

    def __len__(self):
        return len(self.k)


DEFAULT_K = GainVector((20.0, 10.0))


@dataclass(frozen=True)
class BoundSet:
    l_u: float
    l_g: float
    l_inf: float
    l_sup: float
    l_1: float
    l_h: float
    l_B: float

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if not (v > 0 and math.isfinite(v)):
                raise InvalidArgumentError(f"bound {name} must be positive and finite, got {v}")
        if self.l_inf > self.l_sup:
            raise InvalidArgumentError("l_inf must not exceed l_sup")

    @property
    def g_floor(self) -> float:
        return FLOOR_FRACTION * self.l_inf

    def phi_coefficient(self, differentiator: bool = False) -> float:
        """Weight on ||xhat - x|| inside phi: l_1 l_g / l_inf, or (l_1/l_inf + l_u) l_g."""
        if differentiator:
            return (self.l_1 / self.l_inf + self.l_u) * self.l_g
        return self.l_1 * self.l_g / self.l_inf


@dataclass(frozen=True)
class ControlCommand:
    u: float
    saturated: bool = False
    floored: bool = False
    g_hat_used: float = float("nan")


def _command(f_hat, ydn, k, e, g, g_floor, l_u):
    k = k.array if isinstance(k, GainVector) else np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float).ravel()
    if e.size != k.size:
        raise InvalidArgumentError(f"error has {e.size} entries but K has {k.size}")
    u, sat, fl, g_used = control_law(float(f_hat), float(ydn), k, e, float(g), float(g_floor), float(l_u))
    return ControlCommand(float(u), bool(sat), bool(fl), float(g_used))


def full_state_control(x, t: float, k, plant: PlantModel, ref: Reference = DEFAULT_REFERENCE,
                       l_u: float = DEFAULT_L_U, g_floor: Optional[float] = None) -> ControlCommand:
    """Exact cancellation u = (1/g(x)) [-f(x) + y_d^(n) - K^T e] using the true state."""
    x = np.asarray(x, dtype=float).ravel()
    if g_floor is None:
        g_floor = FLOOR_FRACTION * plant.gain_bounds[0]
    r = ref.derivatives(t)
    e = x - r[: plant.n]
    return _command(plant.drift(x), r[plant.n], k, e, plant.input_gain(x), g_floor, l_u)


def adaptive_control(f_hat: float, x, t: float, k, g_eval: float, ref: Reference = DEFAULT_REFERENCE,
                     l_u: float = DEFAULT_L_U, g_floor: float = 0.0) -> ControlCommand:
    """Fuzzy/RBF law: the supplied f_hat replaces f, the error uses the given state."""
    x = np.asarray(x, dtype=float).ravel()
    r = ref.derivatives(t)
    return _command(f_hat, r[x.size], k, x - r[: x.size], g_eval, g_floor, l_u)


def differentiator_control(xhat, t: float, k, g_hat: float, u_prev: float,
                           ref: Reference = DEFAULT_REFERENCE, l_u: float = DEFAULT_L_U,
                           g_floor: float = 0.0) -> ControlCommand:
    """Differentiator-based law with f_hat = xhat_(n+1) - g_hat * u_prev."""
    xhat = np.asarray(xhat, dtype=float).ravel()
    n = xhat.size - 1
    r = ref.derivatives(t)
    f_hat = xhat[n] - g_hat * u_prev
    return _command(f_hat, r[n], k, xhat[:n] - r[:n], g_hat, g_floor, l_u)


def observer_control(xhat, t: float, k, g_hat: float, ref: Reference = DEFAULT_REFERENCE,
                     l_u: float = DEFAULT_L_U, g_floor: float = 0.0) -> ControlCommand:
    """Extended-observer law; xhat_(n+1) is used directly as f_hat."""
    xhat = np.asarray(xhat, dtype=float).ravel()
    n = xhat.size - 1
    r = ref.derivatives(t)
    return _command(xhat[n], r[n], k, xhat[:n] - r[:n], g_hat, g_floor, l_u)


def slotine_error_bound(phi: float, lam: float, n: int, i: int) -> float:
    """|e_i| <= 2^(i-1) phi / lam^(n-i+1)."""
    if phi < 0 or not lam > 0 or not 1 <= i <= n:
        raise InvalidArgumentError("need phi >= 0, lam > 0 and 1 <= i <= n")
    return 2.0 ** (i - 1) * phi / lam ** (n - i + 1)


def phi_observer(f_true: float, xhat_last: float, x, xhat, k, bounds: BoundSet,
                 differentiator: bool = False) -> float:
    """|f - xhat_(n+1)| + c ||xhat - x|| + sum k_i |x_i - xhat_i|.

    With ``differentiator=True`` the caller passes x_n' in place of f and the
    coefficient c switches to (l_1/l_inf + l_u) l_g.
    """
    x = np.asarray(x, dtype=float).ravel()
    xhat = np.asarray(xhat, dtype=float).ravel()[: x.size]
    kk = k.array if isinstance(k, GainVector) else np.asarray(k, dtype=float)
    if xhat.size != x.size or kk.size != x.size:
        raise InvalidArgumentError("x, xhat and K must have the same length")
    d = x - xhat
    return float(abs(f_true - xhat_last) + bounds.phi_coefficient(differentiator) * np.linalg.norm(d)
                 + kk @ np.abs(d))


def estimate_bounds(plant_params, k: GainVector, ref: Reference = DEFAULT_REFERENCE,
                    l_u: float = DEFAULT_L_U, samples: int = 41) -> BoundSet:
    """Sample the pendulum operating box for the constants used in the diagnostics."""
    from .plant import ANGLE_RANGE, RATE_RANGE, pendulum_terms

    pt = plant_params.as_tuple()
    x1 = np.linspace(*ANGLE_RANGE, samples)
    x2 = np.linspace(*RATE_RANGE, samples)
    f = np.empty((samples, samples))
    g = np.empty((samples, samples))
    for a, v1 in enumerate(x1):
        for b, v2 in enumerate(x2):
            f[a, b], g[a, b] = pendulum_terms(v1, v2, *pt)
    l_inf = float(np.abs(g).min())
    l_sup = float(np.abs(g).max())
    # g only depends on x_1: Lipschitz constant from the finite-difference slope
    l_g = float(np.abs(np.diff(g[:, 0]) / np.diff(x1)).max())
    ts = np.linspace(0.0, 2 * math.pi / ref.angular_freq, samples)
    rd = np.array([ref.derivatives(t) for t in ts])
    n = len(k)
    worst = 0.0
    for row in rd:
        e1 = x1[:, None] - row[0]
        e2 = x2[None, :] - row[1]
        worst = max(worst, float(np.abs(f + row[n] - k.k[0] * e1 - k.k[1] * e2).max()))
    l_1 = worst
    df1 = np.abs(np.gradient(f, x1, axis=0))
    df2 = np.abs(np.gradient(f, x2, axis=1))
    xdot2 = np.abs(f) + np.abs(g) * l_u
    l_h = float((df1 * np.abs(x2)[None, :] + df2 * xdot2).max())
    l_B = float(math.hypot((l_sup - l_inf) * l_u, l_h))
    return BoundSet(l_u=l_u, l_g=l_g, l_inf=l_inf, l_sup=l_sup, l_1=l_1, l_h=l_h, l_B=l_B)
