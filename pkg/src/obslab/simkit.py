"""Fixed-step closed-loop simulation.

Plant, estimator, input filter and adaptive parameters share one RK4 grid
t_k = k h.  Per raw step: draw the noise sample, form y = x_1 + noise, compute
the control from the estimates at t_k (held over the step), then advance the
whole coupled state.  Inside the RK4 stages the estimator sees the stage value
of x_1 plus the held noise sample.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _loop
from .approximators import MembershipGrid, DEFAULT_MF_CENTERS, DEFAULT_MF_WIDTH, RbfNetwork, default_rbf
from .control import DEFAULT_L_U, GainVector, estimate_bounds
from .errors import (BudgetExceededError, DegenerateInputError, IntegrationDivergedError,
                     InvalidArgumentError)
from .estimators import EstimatorGains, initial_state
from .numkit import companion_from_gains, polynomial_roots, solve_lyapunov
from .plant import PendulumParams, Reference

MAX_STEPS = 1e8
CHUNK = 1 << 16
STABILITY_FACTOR = 2.5

CONTROLLERS = ("none", "full_state", "fuzzy", "rbf", "differentiator", "observer")
ESTIMATORS = ("none", "integral_chain", "highgain", "extended")
UPREV_MODES = ("filtered", "delayed")

_CTRL_CODE = dict(zip(CONTROLLERS, range(6)))
_EST_CODE = dict(zip(ESTIMATORS, range(4)))


# ------------------------------------------------------------------ noise

class NoiseSource:
    """Uniform measurement noise on [-A, A] from a seeded PCG64 stream.

    Child streams for parallel runs come from :meth:`spawn`, which splits the
    underlying SeedSequence.
    """

    def __init__(self, amplitude: float = 0.0, seed: int = 0, _seq=None):
        if not (amplitude >= 0 and math.isfinite(amplitude)):
            raise InvalidArgumentError(f"noise amplitude must be >= 0, got {amplitude}")
        self.amplitude = float(amplitude)
        self.seed = seed
        self._seq = _seq if _seq is not None else np.random.SeedSequence(seed)
        self._rng = np.random.Generator(np.random.PCG64(self._seq))

    def sample(self) -> float:
        return float(self.samples(1)[0])

    def samples(self, count: int) -> np.ndarray:
        if self.amplitude == 0.0:
            # keep the stream position identical to the noisy case
            self._rng.random(count)
            return np.zeros(count)
        return self.amplitude * (2.0 * self._rng.random(count) - 1.0)

    def spawn(self, k: int):
        return [NoiseSource(self.amplitude, self.seed, s) for s in self._seq.spawn(k)]


def noise_sample(ns: NoiseSource) -> float:
    return ns.sample()


# ------------------------------------------------------------------ scenario

@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "integral_chain"
    epsilon: float = 0.01
    a: tuple = (10.0, 10.0, 10.0)
    clamp: float = 1e3
    clamp_window: float = 10.0  # in units of epsilon

    def __post_init__(self):
        if self.kind not in ESTIMATORS:
            raise InvalidArgumentError(f"unknown estimator kind {self.kind!r}")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))

    def gains(self, n: int = 2) -> Optional[EstimatorGains]:
        if self.kind == "none":
            return None
        return EstimatorGains(n, self.epsilon, self.a)


@dataclass(frozen=True)
class ApproximatorConfig:
    kind: str = "none"
    gamma: float = 100.0
    q_scale: float = 50.0
    mf_centers: tuple = DEFAULT_MF_CENTERS
    mf_width: float = DEFAULT_MF_WIDTH
    theta0: float = 0.1
    rbf_nodes: int = 5
    rbf_span: float = 0.2
    rbf_width: float = 0.1
    w0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "fuzzy", "rbf"):
            raise InvalidArgumentError(f"unknown approximator kind {self.kind!r}")
        object.__setattr__(self, "mf_centers", tuple(float(v) for v in self.mf_centers))
        if not self.gamma > 0 or not self.q_scale > 0:
            raise InvalidArgumentError("gamma and q_scale must be positive")

    def grid(self, n: int = 2) -> MembershipGrid:
        return MembershipGrid.uniform(self.mf_centers, self.mf_width, n)

    def network(self) -> RbfNetwork:
        return default_rbf(self.rbf_nodes, self.rbf_span, self.rbf_width)


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "differentiator"
    gains: tuple = (20.0, 10.0)
    l_u: float = DEFAULT_L_U
    u_prev: str = "filtered"

    def __post_init__(self):
        if self.kind not in CONTROLLERS:
            raise InvalidArgumentError(f"unknown controller kind {self.kind!r}")
        if self.u_prev not in UPREV_MODES:
            raise InvalidArgumentError(f"u_prev must be one of {UPREV_MODES}")
        object.__setattr__(self, "gains", tuple(float(v) for v in self.gains))
        if not self.l_u > 0:
            raise InvalidArgumentError("l_u must be positive")


@dataclass(frozen=True)
class Scenario:
    plant: PendulumParams = field(default_factory=PendulumParams)
    x0: tuple = (math.pi / 60, 0.0)
    reference: Reference = field(default_factory=Reference)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    approximator: ApproximatorConfig = field(default_factory=ApproximatorConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    t_end: float = 10.0
    h: float = 1e-4
    decimation: int = 10
    noise_amplitude: float = 0.0
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))

    @property
    def n(self) -> int:
        return 2

    @property
    def nsteps(self) -> int:
        return int(round(self.t_end / self.h))

    def gain_vector(self) -> GainVector:
        return GainVector(self.controller.gains)

    def validate(self) -> None:
        if not (self.h > 0 and self.t_end > 0):
            raise InvalidArgumentError("need h > 0 and t_end > 0")
        if self.t_end / self.h > MAX_STEPS:
            raise BudgetExceededError(f"t_end/h = {self.t_end / self.h:.3g} exceeds the {MAX_STEPS:.0e} step budget")
        if self.decimation < 1:
            raise InvalidArgumentError("decimation must be >= 1")
        if len(self.x0) != self.n:
            raise InvalidArgumentError(f"x0 must have {self.n} entries")
        if len(self.controller.gains) != self.n:
            raise InvalidArgumentError(f"controller gains must have {self.n} entries")
        self.gain_vector()
        ctrl, est = self.controller.kind, self.estimator.kind
        if ctrl == "differentiator" and est not in ("integral_chain", "highgain"):
            raise InvalidArgumentError("the differentiator controller needs an integral_chain or highgain estimator")
        if ctrl == "observer" and est != "extended":
            raise InvalidArgumentError("the observer controller needs the extended estimator")
        if ctrl in ("fuzzy", "rbf") and self.approximator.kind != ctrl:
            raise InvalidArgumentError(f"controller {ctrl!r} needs approximator kind {ctrl!r}")
        gains = self.estimator.gains(self.n)
        if gains is not None:
            bound = stability_step_bound(gains)
            if self.h > bound:
                raise InvalidArgumentError(
                    f"step h={self.h:g} exceeds the stability bound {bound:.4g} for epsilon={gains.epsilon:g}")


def stability_step_bound(gains: EstimatorGains) -> float:
    """2.5 / max|eig| of the estimator's linear part (roots of the a-polynomial over epsilon)."""
    roots = polynomial_roots(gains.polynomial())
    return STABILITY_FACTOR * gains.epsilon / float(np.max(np.abs(roots)))


# ------------------------------------------------------------------ trace

class SimTrace:
    """Decimated simulation record; columns are addressed by name."""

    COMMENT = "# obslab trace v1"

    def __init__(self, columns: Sequence[str], data: np.ndarray, meta: Optional[dict] = None):
        data = np.array(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(columns):
            raise InvalidArgumentError("data must be 2-D with one column per name")
        data.flags.writeable = False
        self.columns = list(columns)
        self.data = data
        self.meta = dict(meta or {})
        self._index = {c: i for i, c in enumerate(self.columns)}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self._index[name]]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self["t"]

    def block(self, prefix: str, count: int) -> np.ndarray:
        return np.column_stack([self[f"{prefix}{i}"] for i in range(1, count + 1)])

    def window(self, t0: float, t1: float = math.inf) -> np.ndarray:
        return (self.t >= t0) & (self.t <= t1)

    def to_csv(self, path_or_buf) -> None:
        text = self.to_csv_text()
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.COMMENT}; columns: {' '.join(self.columns)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.data:
            buf.write(",".join(format(v, ".17g") for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path) -> "SimTrace":
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
        return cls(header, np.array(rows).reshape(len(rows), len(header)))


# ------------------------------------------------------------------ integrators

def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], state, h: float, t: Optional[float] = None):
    """One classical Runge-Kutta step of x' = rhs(x)."""
    x = np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(x), dtype=float)
    k2 = np.asarray(rhs(x + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(rhs(x + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(rhs(x + h * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationDivergedError("non-finite RK4 stage", time=t)
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_estimator(gains: EstimatorGains, signal: Callable[[float], float], t_end: float, h: float,
                  kind: str = "integral_chain") -> tuple:
    """Drive a bare estimator with a known signal; returns (t, xhat history).

    The signal is evaluated at the RK4 stage times (no hold).
    """
    from .estimators import classical_rhs, differentiator_rhs

    if kind not in ("integral_chain", "highgain"):
        raise InvalidArgumentError(f"unsupported estimator kind {kind!r}")
    if h > stability_step_bound(gains):
        raise InvalidArgumentError("step exceeds the stability bound")
    rhs = differentiator_rhs if kind == "integral_chain" else classical_rhs
    n = int(round(t_end / h))
    xs = np.empty((n + 1, gains.n + 1))
    x = initial_state(signal(0.0), gains)
    xs[0] = x
    for k in range(n):
        t = k * h
        k1 = rhs(x, signal(t), gains)
        k2 = rhs(x + 0.5 * h * k1, signal(t + 0.5 * h), gains)
        k3 = rhs(x + 0.5 * h * k2, signal(t + 0.5 * h), gains)
        k4 = rhs(x + h * k3, signal(t + h), gains)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xs[k + 1] = x
    return np.arange(n + 1) * h, xs


# ------------------------------------------------------------------ closed loop

@dataclass
class _Packed:
    z: np.ndarray
    fp: np.ndarray
    ip: np.ndarray
    a: np.ndarray
    kv: np.ndarray
    pb: np.ndarray
    mf_c: np.ndarray
    mf_w: np.ndarray
    mf_off: np.ndarray
    rbf_c: np.ndarray
    rbf_w: np.ndarray
    m: int
    meta: dict


def lyapunov_matrices(k: GainVector, q_scale: float):
    lam, _ = companion_from_gains(k.k)
    q = q_scale * np.eye(len(k))
    return lam, solve_lyapunov(lam, q), q


def _pack(s: Scenario) -> _Packed:
    n = s.n
    k = s.gain_vector()
    bounds = estimate_bounds(s.plant, k, s.reference, s.controller.l_u)
    gains = s.estimator.gains(n)
    approx = s.approximator
    ctrl = s.controller.kind

    m = 0
    theta0 = np.zeros(0)
    mf_c, mf_w, mf_off = np.zeros(1), np.ones(1), np.zeros(2, dtype=np.int64)
    rbf_c, rbf_w = np.zeros((1, n)), np.ones(1)
    pb = np.zeros(n)
    if ctrl in ("fuzzy", "rbf"):
        _, p, _ = lyapunov_matrices(k, approx.q_scale)
        pb = p[:, -1].copy()
        if ctrl == "fuzzy":
            grid = approx.grid(n)
            mf_c, mf_w, mf_off = grid.flat()
            m = grid.n_rules
            theta0 = np.full(m, approx.theta0)
        else:
            net = approx.network()
            rbf_c, rbf_w = net.centers, net.widths
            m = net.size
            theta0 = np.full(m, approx.w0)

    z = np.zeros(3 * n + 2 + m)
    z[:n] = s.x0
    if gains is not None:
        z[n:2 * n + 1] = initial_state(s.x0[0], gains)
    z[3 * n + 2:] = theta0

    fp = np.zeros(_loop.N_FP)
    fp[_loop.FP_GRAV: _loop.FP_L + 1] = s.plant.as_tuple()
    fp[_loop.FP_REF_A] = s.reference.amplitude
    fp[_loop.FP_REF_W] = s.reference.angular_freq
    fp[_loop.FP_EPS] = gains.epsilon if gains is not None else 1.0
    fp[_loop.FP_GAMMA] = approx.gamma
    fp[_loop.FP_LU] = s.controller.l_u
    fp[_loop.FP_GFLOOR] = bounds.g_floor
    fp[_loop.FP_CLAMP] = s.estimator.clamp
    fp[_loop.FP_CLAMP_UNTIL] = s.estimator.clamp_window * gains.epsilon if gains is not None else -1.0
    fp[_loop.FP_H] = s.h
    fp[_loop.FP_PHI_C] = bounds.phi_coefficient(differentiator=s.estimator.kind != "extended")

    ip = np.zeros(_loop.N_IP, dtype=np.int64)
    ip[_loop.IP_N] = n
    ip[_loop.IP_CTRL] = _CTRL_CODE[ctrl]
    ip[_loop.IP_EST] = _EST_CODE[s.estimator.kind]
    ip[_loop.IP_M] = m
    ip[_loop.IP_UPREV] = UPREV_MODES.index(s.controller.u_prev)
    ip[_loop.IP_DECIM] = s.decimation
    ip[_loop.IP_NSTEPS] = s.nsteps

    a = gains.a_array if gains is not None else np.ones(n + 1)
    meta = {"bounds": bounds, "m": m, "backend": None}
    return _Packed(z, fp, ip, a, k.array, pb, mf_c, mf_w, mf_off,
                   np.ascontiguousarray(rbf_c), rbf_w, m, meta)


def run_closed_loop(s: Scenario, noise: Optional[NoiseSource] = None) -> SimTrace:
    """Simulate a scenario and return its decimated trace.

    Raises IntegrationDivergedError (with the failure time) when a state turns
    non-finite, and BudgetExceededError for oversize runs.
    """
    from ._jit import backend_name

    s.validate()
    pk = _pack(s)
    n, m = s.n, pk.m
    nsteps = s.nsteps
    nrows = nsteps // s.decimation + 2
    out = np.full((nrows, _loop.n_columns(n, m)), np.nan)
    mem = np.zeros(3)
    if noise is None:
        noise = NoiseSource(s.noise_amplitude, s.seed)
    k = 0
    while k <= nsteps:
        stop = min(k + CHUNK, nsteps + 1)
        chunk = noise.samples(stop - k)
        status = _loop.advance(pk.z, mem, k, stop, chunk, pk.fp, pk.ip, pk.a, pk.kv, pk.pb,
                               pk.mf_c, pk.mf_w, pk.mf_off, pk.rbf_c, pk.rbf_w, out)
        if status == _loop.STATUS_DIVERGED:
            raise IntegrationDivergedError(f"simulation diverged at t={mem[2]:.6g} s", time=float(mem[2]))
        if status == _loop.STATUS_DEGENERATE:
            raise DegenerateInputError(f"approximator basis undefined (non-finite state) at t={mem[2]:.6g} s")
        k = stop
    rows = int(mem[1])
    meta = dict(pk.meta, backend=backend_name(), scenario=s.name)
    return SimTrace(_loop.column_names(n, m), out[:rows], meta)


def with_epsilon(s: Scenario, epsilon: float) -> Scenario:
    return replace(s, estimator=replace(s.estimator, epsilon=epsilon))


def steady_observer_error(trace: SimTrace, t0: float, t1: float = math.inf, n: int = 2) -> float:
    """max ||z(t)|| over the window."""
    w = trace.window(t0, t1)
    z = trace.block("z", n + 1)[w]
    return float(np.max(np.linalg.norm(z, axis=1)))
