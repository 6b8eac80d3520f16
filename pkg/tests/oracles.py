"""Independent reconstructions used by several test files."""
import numpy as np

from obslab.approximators import fuzzy_basis
from obslab.simkit import lyapunov_matrices


def lyapunov_identity_residual(scenario, trace, ref_index=None, min_error=1e-3):
    """Finite-difference dV/dt against -1/2 e'Qe + e'Pb w + (1/gamma)(theta - theta_ref)' theta_dot.

    e is taken in reference-minus-state coordinates, w = fhat - f from the log,
    and theta_dot is rebuilt from the adaptation law using the logged state.
    Returns (aggregate relative L2 error, number of samples used).
    """
    ap = scenario.approximator
    _, p, q = lyapunov_matrices(scenario.gain_vector(), ap.q_scale)
    grid = ap.grid()
    t = trace.t
    theta = trace.block("theta", grid.n_rules)
    e = -np.column_stack([trace["e1"], trace["e2"]])
    x = np.column_stack([trace["x1"], trace["x2"]])
    ref = theta[len(t) // 2 if ref_index is None else ref_index]
    v = 0.5 * np.einsum("ij,jk,ik->i", e, p, e) + 0.5 / ap.gamma * np.sum((theta - ref) ** 2, axis=1)
    epb = e @ p[:, -1]
    xi = np.array([fuzzy_basis(s, grid) for s in x])
    theta_dot = -ap.gamma * epb[:, None] * xi
    w = trace["fhat"] - trace["f"]
    rhs = -0.5 * np.einsum("ij,jk,ik->i", e, q, e) + epb * w + np.sum((theta - ref) * theta_dot, axis=1) / ap.gamma
    dv = np.gradient(v, t)
    mask = np.linalg.norm(e, axis=1) > min_error
    mask[:2] = mask[-2:] = False
    return float(np.linalg.norm((dv - rhs)[mask]) / np.linalg.norm(rhs[mask])), int(mask.sum())
