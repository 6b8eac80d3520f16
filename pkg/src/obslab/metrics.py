"""Summary numbers computed from a trace alone.

Everything here reads only the logged columns, so the same figures can be
recomputed by anyone holding the CSV.
"""
from __future__ import annotations

import json
import math
from typing import Dict

import numpy as np

from .simkit import SimTrace

DEFAULT_SETTLE = 2.0


def _rms(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(np.mean(v * v))) if v.size else math.nan


def has_estimates(trace: SimTrace) -> bool:
    return "xhat1" in trace and bool(np.all(np.isfinite(trace["xhat1"])))


def velocity_jitter(trace: SimTrace) -> float:
    """Std of the first differences of the velocity estimate (high-frequency content)."""
    if not has_estimates(trace):
        return math.nan
    return float(np.std(np.diff(trace["xhat2"])))


def compute_metrics(trace: SimTrace, settle: float = DEFAULT_SETTLE) -> Dict[str, float]:
    t = trace.t
    w = t >= settle
    half = t >= 0.5 * t[-1]
    err = trace["fhat"][w] - trace["f"][w]
    f_rms = _rms(trace["f"][w])
    out = {
        "settle_time": settle,
        "rms_e1": _rms(trace["e1"][w]),
        "max_abs_e1_after_settle": float(np.max(np.abs(trace["e1"][w]))) if w.any() else math.nan,
        "fhat_rms_error": _rms(err),
        "f_rms": f_rms,
        "fhat_rel_error": _rms(err) / f_rms if f_rms > 0 else math.nan,
        "saturation_duty": float(np.mean(trace["saturated"])),
        "max_abs_u": float(np.max(np.abs(trace["u"]))),
        "observer_steady_norm": math.nan,
        "velocity_rms_error": math.nan,
        "noise_amplification": math.nan,
    }
    if has_estimates(trace):
        z = np.column_stack([trace[c] for c in trace.columns if c.startswith("z")])
        out["observer_steady_norm"] = float(np.max(np.linalg.norm(z[half], axis=1)))
        out["velocity_rms_error"] = _rms(trace["xhat2"][w] - trace["x2"][w])
        out["noise_amplification"] = velocity_jitter(trace)
    return out


def metrics_json(metrics: Dict[str, float]) -> str:
    clean = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in metrics.items()}
    return json.dumps(clean, indent=2, sort_keys=True) + "\n"
