"""Small dense linear algebra and polynomial helpers.

Every matrix handled here is at most (n+1)x(n+1) with n around ten, so all
routines are dense and unblocked.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import InvalidArgumentError, SingularSystemError

# first-column entries of the Routh array smaller than this count as zero
ROUTH_ZERO_TOL = 1e-12
EIG_MAX_ITER = 500
SINGULAR_COND = 1e14


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, coefficients ordered from the highest degree down."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) == 0:
            raise InvalidArgumentError("polynomial needs at least one coefficient")
        if c[0] == 0.0:
            raise InvalidArgumentError("leading coefficient must be nonzero")
        if not all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, s):
        return np.polyval(self.coeffs, s)

    def roots(self) -> np.ndarray:
        return polynomial_roots(self)

    @classmethod
    def from_gains(cls, gains: Sequence[float]) -> "Polynomial":
        """Monic polynomial s^m + g_m s^(m-1) + ... + g_1 from gains (g_1, ..., g_m)."""
        return cls((1.0,) + tuple(float(g) for g in reversed(gains)))


PolyLike = Union[Polynomial, Sequence[float]]


def as_polynomial(p: PolyLike) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(tuple(p))


def routh_hurwitz(p: PolyLike) -> bool:
    """Routh test: True iff every root of ``p`` lies strictly in the left half plane.

    Any first-column entry with magnitude below ``ROUTH_ZERO_TOL`` rejects the
    polynomial outright; marginal cases are treated as unstable.
    """
    p = as_polynomial(p)
    if p.degree < 1:
        raise InvalidArgumentError("Routh test needs degree >= 1")
    c = np.asarray(p.coeffs, dtype=float)
    if c[0] < 0:
        c = -c
    deg = p.degree
    width = deg // 2 + 1
    prev = np.zeros(width)
    cur = np.zeros(width)
    prev[: len(c[0::2])] = c[0::2]
    cur[: len(c[1::2])] = c[1::2]
    first = [prev[0]]
    for _ in range(deg):
        if abs(cur[0]) < ROUTH_ZERO_TOL:
            return False
        first.append(cur[0])
        nxt = np.zeros(width)
        for j in range(width - 1):
            nxt[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0]
        prev, cur = cur, nxt
    first = np.asarray(first)
    return bool(np.all(first > 0))


def companion_from_gains(gains: Sequence[float]):
    """Companion matrix of s^n + k_n s^(n-1) + ... + k_1 and the input column b.

    Ones sit on the superdiagonal; the bottom row is (-k_1, ..., -k_n) with the
    lowest-order coefficient leftmost.
    """
    k = np.asarray(gains, dtype=float).ravel()
    if k.size == 0:
        raise InvalidArgumentError("gain vector must be non-empty")
    n = k.size
    lam = np.zeros((n, n))
    lam[np.arange(n - 1), np.arange(1, n)] = 1.0
    lam[-1, :] = -k
    b = np.zeros(n)
    b[-1] = 1.0
    return lam, b


def solve_lyapunov(lam, q) -> np.ndarray:
    """Solve lam^T P + P lam = -Q for symmetric P.

    The equation is vectorized to (I kron lam^T + lam^T kron I) vec(P) = -vec(Q)
    and solved densely (LU with partial pivoting).
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    n = lam.shape[0]
    if lam.shape != (n, n) or q.shape != (n, n):
        raise InvalidArgumentError(f"expected two square matrices of equal size, got {lam.shape} and {q.shape}")
    eye = np.eye(n)
    big = np.kron(eye, lam.T) + np.kron(lam.T, eye)
    rhs = -q.reshape(-1, order="F")
    if not is_hurwitz_matrix(lam):
        raise SingularSystemError("lam is not Hurwitz; the Lyapunov equation has no positive definite solution")
    try:
        vec = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    p = vec.reshape(n, n, order="F")
    return 0.5 * (p + p.T)


@dataclass(frozen=True)
class LyapunovPair:
    P: np.ndarray
    Q: np.ndarray

    def residual(self, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        return float(np.abs(lam.T @ self.P + self.P @ lam + self.Q).max())


def lyapunov_pair(lam, q) -> LyapunovPair:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if not np.allclose(q, q.T) or not is_positive_definite(q):
        raise InvalidArgumentError("Q must be symmetric positive definite")
    return LyapunovPair(P=solve_lyapunov(lam, q), Q=q)


def is_positive_definite(m) -> bool:
    """Sylvester's criterion on the leading principal minors."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return all(np.linalg.det(m[:k, :k]) > 0 for k in range(1, m.shape[0] + 1))


def is_hurwitz_matrix(a) -> bool:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return bool(np.all(np.linalg.eigvals(a).real < 0))


def companion_of(p: PolyLike) -> np.ndarray:
    p = as_polynomial(p)
    c = np.asarray(p.coeffs) / p.coeffs[0]
    return companion_from_gains(c[1:][::-1])[0]


def polynomial_roots(p: PolyLike) -> np.ndarray:
    """Roots as eigenvalues of the companion matrix (LAPACK Hessenberg QR)."""
    p = as_polynomial(p)
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    try:
        return np.linalg.eigvals(companion_of(p)).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"eigenvalue iteration did not converge: {exc}") from exc


def min_decay_rate(p: PolyLike) -> float:
    """Slowest decay rate min |Re(root)| of a Hurwitz polynomial."""
    p = as_polynomial(p)
    roots = polynomial_roots(p)
    if roots.size == 0 or np.any(roots.real >= 0):
        raise InvalidArgumentError(f"polynomial {p.coeffs} is not Hurwitz")
    return float(np.min(np.abs(roots.real)))


def observer_noise_tf(a, l, i: int, omega: float) -> complex:
    """e_i^T (j omega I - A)^-1 L, with ``i`` counted from 1."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    l = np.asarray(l, dtype=float).ravel()
    n = a.shape[0]
    if not 1 <= i <= n:
        raise InvalidArgumentError(f"output index {i} outside 1..{n}")
    m = 1j * omega * np.eye(n) - a
    # equilibrate rows and columns so that mere bad scaling (gains like a/eps^k)
    # is not mistaken for singularity
    r = np.max(np.abs(m), axis=1)
    if np.any(r == 0):
        raise SingularSystemError(f"j*omega*I - A is singular at omega={omega}")
    ms = m / r[:, None]
    c = np.max(np.abs(ms), axis=0)
    if np.any(c == 0) or np.linalg.cond(ms / c) > SINGULAR_COND:
        raise SingularSystemError(f"j*omega*I - A is numerically singular at omega={omega}")
    x = np.linalg.solve(ms / c, l.astype(complex) / r) / c
    return complex(x[i - 1])
