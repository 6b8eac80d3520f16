"""Adaptive fuzzy system and RBF network baselines.

The fuzzy system uses Gaussian memberships with product inference over a
tensor-product rule base and normalized firing strengths.  The RBF network is
a plain weighted sum of Gaussian bumps.  Both adapt their consequent
parameters with the gradient law  p' = -gamma (e^T P b) basis(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._jit import kernel
from .errors import DegenerateInputError, InvalidArgumentError



@kernel
def gaussian_membership(x, center, width):
    r = (x - center) / width
    return math.exp(-r * r)


@kernel
def fuzzy_basis_kernel(x, centers, widths, offsets, mu, out):
    """Fill ``out`` with normalized rule firing strengths.

    ``centers``/``widths`` hold the membership functions of all dimensions back
    to back; dimension d owns entries offsets[d]:offsets[d+1].  Rules are
    enumerated with the last dimension varying fastest.  Firing strengths are
    formed in the log domain and shifted by their maximum before
    exponentiating, so far from every center the ratio is still exact instead
    of 0/0.  Returns the shifted normalizer (>= 1 for finite x, NaN otherwise).
    """
    ndim = offsets.shape[0] - 1
    for d in range(ndim):
        for k in range(offsets[d], offsets[d + 1]):
            r = (x[d] - centers[k]) / widths[k]
            mu[k] = -r * r
    nrules = out.shape[0]
    top = -math.inf
    for r in range(nrules):
        rem = r
        acc = 0.0
        for d in range(ndim - 1, -1, -1):
            p = offsets[d + 1] - offsets[d]
            acc += mu[offsets[d] + rem % p]
            rem //= p
        out[r] = acc
        if acc > top:
            top = acc
    total = 0.0
    for r in range(nrules):
        out[r] = math.exp(out[r] - top)
        total += out[r]
    for r in range(nrules):
        out[r] /= total
    return total


@kernel
def rbf_basis_kernel(x, centers, widths, out):
    m = centers.shape[0]
    for j in range(m):
        d2 = 0.0
        for i in range(centers.shape[1]):
            diff = x[i] - centers[j, i]
            d2 += diff * diff
        out[j] = math.exp(-d2 / (widths[j] * widths[j]))


@dataclass(frozen=True)
class MembershipGrid:
    """Gaussian membership functions per input dimension.

    ``centers[d]`` and ``widths[d]`` list the functions of dimension d.
    """

    centers: tuple
    widths: tuple

    def __post_init__(self):
        c = tuple(tuple(float(v) for v in dim) for dim in self.centers)
        w = tuple(tuple(float(v) for v in dim) for dim in self.widths)
        if len(c) == 0 or len(c) != len(w):
            raise InvalidArgumentError("centers and widths need the same, non-zero number of dimensions")
        for cd, wd in zip(c, w):
            if len(cd) == 0 or len(cd) != len(wd):
                raise InvalidArgumentError("each dimension needs matching, non-empty centers and widths")
            if any(not v > 0 for v in wd):
                raise InvalidArgumentError("membership widths must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)

    @classmethod
    def uniform(cls, centers: Sequence[float], width: float, ndim: int) -> "MembershipGrid":
        return cls(tuple(tuple(centers) for _ in range(ndim)),
                   tuple(tuple([width] * len(centers)) for _ in range(ndim)))

    @property
    def ndim(self) -> int:
        return len(self.centers)

    @property
    def counts(self) -> tuple:
        return tuple(len(c) for c in self.centers)

    @property
    def n_rules(self) -> int:
        return int(np.prod(self.counts))

    def flat(self):
        """(centers, widths, offsets) arrays in the layout the kernels expect."""
        offsets = np.zeros(self.ndim + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(self.counts)
        return (np.array([v for dim in self.centers for v in dim]),
                np.array([v for dim in self.widths for v in dim]),
                offsets)


# labels NM, NS, Z, PS, PM of the five-set grid
DEFAULT_MF_CENTERS = (-math.pi / 6, -math.pi / 12, 0.0, math.pi / 12, math.pi / 6)
DEFAULT_MF_WIDTH = math.pi / 24
DEFAULT_MF_LABELS = ("NM", "NS", "Z", "PS", "PM")


def default_grid(ndim: int = 2) -> MembershipGrid:
    return MembershipGrid.uniform(DEFAULT_MF_CENTERS, DEFAULT_MF_WIDTH, ndim)


def membership_eval(x_i: float, grid: MembershipGrid, dim: int, index: int) -> float:
    """mu(x_i) = exp(-((x_i - center)/width)^2) for function ``index`` of dimension ``dim``."""
    try:
        c = grid.centers[dim][index]
        w = grid.widths[dim][index]
    except IndexError:
        raise InvalidArgumentError(f"no membership function ({dim}, {index})") from None
    return gaussian_membership(float(x_i), c, w)


def fuzzy_basis(x, grid: MembershipGrid) -> np.ndarray:
    """Normalized firing strengths xi(x), one entry per rule (product of memberships)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != grid.ndim:
        raise InvalidArgumentError(f"grid has {grid.ndim} inputs, got a state of size {x.size}")
    centers, widths, offsets = grid.flat()
    out = np.empty(grid.n_rules)
    total = fuzzy_basis_kernel(x, centers, widths, offsets, np.empty(centers.size), out)
    if not np.isfinite(total):
        raise DegenerateInputError(f"fuzzy basis undefined at x={x.tolist()}")
    return out


def _dot(a, b, what):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise InvalidArgumentError(f"{what}: length mismatch {a.size} vs {b.size}")
    return float(a @ b)


def fuzzy_output(theta, xi) -> float:
    return _dot(theta, xi, "fuzzy_output")


def rbf_output(weights, h) -> float:
    return _dot(weights, h, "rbf_output")


def _adapt(e, p, basis, gamma):
    e = np.asarray(e, dtype=float).ravel()
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if p.shape != (e.size, e.size):
        raise InvalidArgumentError(f"P has shape {p.shape}, expected {(e.size, e.size)}")
    # e^T P b with b = (0, ..., 0, 1): last column of P
    return -gamma * float(e @ p[:, -1]) * np.asarray(basis, dtype=float)


def fuzzy_adapt_rhs(e, p, xi, gamma: float) -> np.ndarray:
    """theta' = -gamma (e^T P b) xi.

    ``e`` must be expressed in the coordinates where the error dynamics read
    e' = Lambda e + b (f_hat - f); see :func:`lyapunov_error`.
    """
    return _adapt(e, p, xi, gamma)


def rbf_adapt_rhs(e, p, h, gamma: float) -> np.ndarray:
    return _adapt(e, p, h, gamma)


def lyapunov_error(x, reference_derivs) -> np.ndarray:
    """Reference minus state: the error coordinates used by the adaptive laws.

    With u = (1/g)[-f_hat + y_d^(n) - K^T (x - y_d)] the tracking error
    x - y_d obeys e' = Lambda e + b (f - f_hat); its negative obeys the
    f_hat - f form the adaptation law is derived for.
    """
    x = np.asarray(x, dtype=float).ravel()
    return np.asarray(reference_derivs, dtype=float)[: x.size] - x


@dataclass(frozen=True)
class RbfNetwork:
    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        w = np.asarray(self.widths, dtype=float).ravel()
        if c.shape[0] != w.size:
            raise InvalidArgumentError("need one width per center")
        if np.any(w <= 0):
            raise InvalidArgumentError("RBF widths must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)

    @property
    def size(self) -> int:
        return self.widths.size

    def basis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.centers.shape[1]:
            raise InvalidArgumentError(f"network expects {self.centers.shape[1]} inputs, got {x.size}")
        out = np.empty(self.size)
        rbf_basis_kernel(x, self.centers, self.widths, out)
        return out


def default_rbf(nodes: int = 5, span: float = 0.2, width: float = 0.1) -> RbfNetwork:
    """Centers evenly spaced on the diagonal of [-span, span]^2."""
    d = np.linspace(-span, span, nodes)
    return RbfNetwork(np.column_stack([d, d]), np.full(nodes, width))


def rbf_gaussian(x, center, width: float) -> float:
    x = np.asarray(x, dtype=float).ravel()
    c = np.asarray(center, dtype=float).ravel()
    if not width > 0:
        raise InvalidArgumentError("width must be positive")
    return float(math.exp(-float((x - c) @ (x - c)) / width ** 2))


def lyapunov_value(e, p, param_error, gamma: float) -> float:
    """V = 1/2 e^T P e + 1/(2 gamma) |param_error|^2."""
    e = np.asarray(e, dtype=float).ravel()
    d = np.asarray(param_error, dtype=float).ravel()
    return float(0.5 * e @ np.asarray(p, dtype=float) @ e + 0.5 / gamma * (d @ d))
