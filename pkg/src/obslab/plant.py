"""Integrator-chain plants and the sinusoidal reference trajectory.

A plant is x_1' = x_2, ..., x_n' = f(x) + g(x) u with output y = x_1.  The
drift ``f`` and the input gain ``g`` are kept as separate callables because the
output-feedback controllers evaluate g at the *estimated* state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from ._jit import kernel
from .errors import InvalidArgumentError

GRAVITY = 9.8

# operating box used for sampled checks and bound estimation
ANGLE_RANGE = (-math.pi / 3, math.pi / 3)
RATE_RANGE = (-5.0, 5.0)


@kernel
def pendulum_terms(x1, x2, gravity, cart_mass, pole_mass, half_length):
    """Drift f and input gain g of the cart-pole angle subsystem."""
    total = cart_mass + pole_mass
    c = math.cos(x1)
    s = math.sin(x1)
    den = half_length * (4.0 / 3.0 - pole_mass * c * c / total)
    f = (gravity * s - pole_mass * half_length * x2 * x2 * c * s / total) / den
    g = (c / total) / den
    return f, g


@dataclass(frozen=True)
class PendulumParams:
    gravity: float = GRAVITY
    cart_mass: float = 1.0
    pendulum_mass: float = 0.1
    half_length: float = 0.5

    def __post_init__(self):
        for name in ("gravity", "cart_mass", "pendulum_mass", "half_length"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be finite and positive, got {v}")
        # the denominator 4/3 - m cos^2/(mc+m) is smallest at cos^2 = 1
        if self.pendulum_mass / (self.cart_mass + self.pendulum_mass) >= 4.0 / 3.0:
            raise InvalidArgumentError("pendulum parameters make the dynamics denominator vanish")

    def as_tuple(self):
        return (self.gravity, self.cart_mass, self.pendulum_mass, self.half_length)


@dataclass(frozen=True)
class PlantModel:
    """n-th order integrator chain with drift f(x) and input gain g(x)."""

    n: int
    drift: Callable[[np.ndarray], float]
    input_gain: Callable[[np.ndarray], float]
    gain_bounds: Tuple[float, float]
    name: str = "plant"

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgumentError("plant order must be >= 1")
        lo, hi = self.gain_bounds
        if not (0 < lo <= hi):
            raise InvalidArgumentError(f"need 0 < l_inf <= l_sup, got {self.gain_bounds}")

    def rhs(self, x, u: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dx = np.empty_like(x)
        dx[:-1] = x[1:]
        dx[-1] = self.drift(x) + self.input_gain(x) * u
        return dx


def pendulum_gain_bounds(params: PendulumParams, samples: int = 2001):
    """Sampled min/max of |g| over the operating angle range (g does not depend on x_2)."""
    x1 = np.linspace(*ANGLE_RANGE, samples)
    g = np.array([pendulum_terms(v, 0.0, *params.as_tuple())[1] for v in x1])
    return float(np.min(np.abs(g))), float(np.max(np.abs(g)))


def pendulum_model(params: PendulumParams = PendulumParams()) -> PlantModel:
    pt = params.as_tuple()

    def drift(x):
        return pendulum_terms(float(x[0]), float(x[1]), *pt)[0]

    def input_gain(x):
        return pendulum_terms(float(x[0]), float(x[1]), *pt)[1]

    return PlantModel(n=2, drift=drift, input_gain=input_gain,
                      gain_bounds=pendulum_gain_bounds(params), name="pendulum")


def pendulum_dynamics(x, u: float, params: PendulumParams = PendulumParams()) -> np.ndarray:
    """State derivative (x_2, f(x) + g(x) u) of the pendulum angle subsystem."""
    x = np.asarray(x, dtype=float)
    if x.shape != (2,) or not np.all(np.isfinite(x)) or not math.isfinite(u):
        raise InvalidArgumentError(f"need a finite 2-state and finite input, got x={x}, u={u}")
    f, g = pendulum_terms(x[0], x[1], *params.as_tuple())
    return np.array([x[1], f + g * u])


@kernel
def reference_derivative(t, order, amplitude, omega):
    # d^k/dt^k A sin(w t) = A w^k sin(w t + k pi/2); the phase is reduced mod 4
    # so sin/cos hit exact zeros at t = 0
    k = order % 4
    scale = amplitude * omega ** order
    if k == 0:
        return scale * math.sin(omega * t)
    if k == 1:
        return scale * math.cos(omega * t)
    if k == 2:
        return -scale * math.sin(omega * t)
    return -scale * math.cos(omega * t)


@dataclass(frozen=True)
class Reference:
    """y_d(t) = amplitude * sin(angular_freq * t) and its exact derivatives."""

    amplitude: float = 0.1
    angular_freq: float = math.pi
    max_order: int = 2

    def derivative(self, t: float, order: int = 0) -> float:
        if not 0 <= order <= self.max_order:
            raise InvalidArgumentError(f"derivative order {order} outside 0..{self.max_order}")
        return reference_derivative(float(t), int(order), self.amplitude, self.angular_freq)

    def derivatives(self, t: float) -> np.ndarray:
        """(y_d, y_d', ..., y_d^(max_order)) at time t."""
        return np.array([self.derivative(t, k) for k in range(self.max_order + 1)])


DEFAULT_REFERENCE = Reference()


def reference_signal(t: float, order: int, ref: Reference = DEFAULT_REFERENCE) -> float:
    return ref.derivative(t, order)


def tracking_error(x, t: float, ref: Reference = DEFAULT_REFERENCE) -> np.ndarray:
    """e_i = x_i - y_d^(i-1)(t)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size > ref.max_order + 1:
        raise InvalidArgumentError(f"state of size {x.size} needs reference derivatives beyond order {ref.max_order}")
    return x - np.array([ref.derivative(t, k) for k in range(x.size)])
