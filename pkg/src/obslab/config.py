"""Scenario files: TOML text <-> :class:`~obslab.simkit.Scenario`.

Sections are [plant], [estimator], [approximator], [controller], [sim] and
[noise].  Only ``[sim] t_end`` is mandatory; every other key defaults to the
differentiator benchmark.  Numeric entries may be written as arithmetic in
``pi`` (e.g. ``"pi/60"``) so presets can carry the published values verbatim.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Any, Dict

import tomli
import tomli_w

from .errors import ConfigError, InvalidArgumentError
from .plant import PendulumParams, Reference
from .simkit import ApproximatorConfig, ControllerConfig, EstimatorConfig, Scenario

PRESETS = ("fig3", "fig4", "fig5", "fig6", "observer")

SCHEMA: Dict[str, Dict[str, str]] = {
    "plant": {"kind": "str", "gravity": "num", "cart_mass": "num", "pendulum_mass": "num",
              "half_length": "num", "x0": "numlist"},
    "estimator": {"kind": "str", "epsilon": "num", "a": "numlist", "clamp": "num", "clamp_window": "num"},
    "approximator": {"kind": "str", "gamma": "num", "q_scale": "num", "mf_centers": "numlist",
                     "mf_width": "num", "theta0": "num", "rbf_nodes": "int", "rbf_span": "num",
                     "rbf_width": "num", "w0": "num"},
    "controller": {"kind": "str", "gains": "numlist", "l_u": "num", "u_prev": "str"},
    "sim": {"name": "str", "t_end": "num", "step": "num", "decimation": "int",
            "reference_amplitude": "num", "reference_frequency": "num"},
    "noise": {"amplitude": "num", "seed": "int"},
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def eval_number(expr: str) -> float:
    """Evaluate arithmetic over numbers and ``pi``; nothing else is allowed."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](walk(node.operand))
        raise ValueError(f"unsupported expression {expr!r}")

    try:
        return float(walk(ast.parse(expr.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"bad numeric expression {expr!r}: {exc}") from None


def _locate(text: str, section: str, key: str = None):
    """1-based line of ``[section]`` or of ``key = ...`` inside it; None when absent."""
    if text is None:
        return None
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return no
    return None


def _coerce(kind: str, value: Any, where: str):
    def num(v):
        if isinstance(v, bool):
            raise ValueError("booleans are not numbers")
        if isinstance(v, (int, float)):
            return float(v)
        if isinstance(v, str):
            return eval_number(v)
        raise ValueError(f"expected a number, got {type(v).__name__}")

    if kind == "str":
        if not isinstance(value, str):
            raise ValueError("expected a string")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError("expected an integer")
        return value
    if kind == "num":
        return num(value)
    if kind == "numlist":
        if not isinstance(value, list):
            raise ValueError("expected an array")
        return [num(v) for v in value]
    raise AssertionError(where)


def normalize(doc: Dict[str, Any], text: str = None) -> Dict[str, Dict[str, Any]]:
    """Check a parsed document against the schema and evaluate numeric expressions."""
    clean: Dict[str, Dict[str, Any]] = {}
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=_locate(text, section))
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table", line=_locate(text, section))
        clean[section] = {}
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line=_locate(text, section, key))
            try:
                clean[section][key] = _coerce(SCHEMA[section][key], value, f"{section}.{key}")
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}", line=_locate(text, section, key)) from None
    if "t_end" not in clean.get("sim", {}):
        raise ConfigError("missing required key t_end in [sim]", line=_locate(text, "sim"))
    return clean


def scenario_from_dict(cfg: Dict[str, Dict[str, Any]], text: str = None) -> Scenario:
    p = cfg.get("plant", {})
    e = cfg.get("estimator", {})
    ap = cfg.get("approximator", {})
    c = cfg.get("controller", {})
    sim = cfg["sim"]
    nz = cfg.get("noise", {})
    if p.get("kind", "pendulum") != "pendulum":
        raise ConfigError(f"unsupported plant kind {p['kind']!r}", line=_locate(text, "plant", "kind"))
    try:
        base = Scenario()
        plant = PendulumParams(**{k: v for k, v in p.items() if k not in ("kind", "x0")})
        ref = Reference(sim.get("reference_amplitude", base.reference.amplitude),
                        sim.get("reference_frequency", base.reference.angular_freq))
        return Scenario(
            plant=plant,
            x0=tuple(p.get("x0", base.x0)),
            reference=ref,
            estimator=EstimatorConfig(**{**e, "a": tuple(e.get("a", EstimatorConfig().a))}),
            approximator=ApproximatorConfig(**{**ap, "mf_centers": tuple(ap.get("mf_centers", ApproximatorConfig().mf_centers))}),
            controller=ControllerConfig(**{**c, "gains": tuple(c.get("gains", ControllerConfig().gains))}),
            t_end=sim["t_end"],
            h=sim.get("step", base.h),
            decimation=sim.get("decimation", base.decimation),
            noise_amplitude=nz.get("amplitude", 0.0),
            seed=nz.get("seed", 0),
            name=sim.get("name", base.name),
        )
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from None


def parse_scenario(text: str) -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return scenario_from_dict(normalize(doc, text), text)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("obslab").joinpath("presets", f"{name}.toml").read_text()


def load_preset(name: str) -> Scenario:
    return parse_scenario(preset_text(name))


def scenario_to_dict(s: Scenario) -> Dict[str, Dict[str, Any]]:
    return {
        "plant": {"kind": "pendulum", "gravity": s.plant.gravity, "cart_mass": s.plant.cart_mass,
                  "pendulum_mass": s.plant.pendulum_mass, "half_length": s.plant.half_length,
                  "x0": list(s.x0)},
        "estimator": {"kind": s.estimator.kind, "epsilon": s.estimator.epsilon, "a": list(s.estimator.a),
                      "clamp": s.estimator.clamp, "clamp_window": s.estimator.clamp_window},
        "approximator": {"kind": s.approximator.kind, "gamma": s.approximator.gamma,
                         "q_scale": s.approximator.q_scale, "mf_centers": list(s.approximator.mf_centers),
                         "mf_width": s.approximator.mf_width, "theta0": s.approximator.theta0,
                         "rbf_nodes": s.approximator.rbf_nodes, "rbf_span": s.approximator.rbf_span,
                         "rbf_width": s.approximator.rbf_width, "w0": s.approximator.w0},
        "controller": {"kind": s.controller.kind, "gains": list(s.controller.gains), "l_u": s.controller.l_u,
                       "u_prev": s.controller.u_prev},
        "sim": {"name": s.name, "t_end": s.t_end, "step": s.h, "decimation": s.decimation,
                "reference_amplitude": s.reference.amplitude,
                "reference_frequency": s.reference.angular_freq},
        "noise": {"amplitude": s.noise_amplitude, "seed": s.seed},
    }


def dump_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def resolve_parameter(param: str):
    """Map ``key`` or ``section.key`` to a scalar numeric schema entry."""
    if "." in param:
        section, key = param.split(".", 1)
    else:
        owners = [sec for sec, keys in SCHEMA.items() if param in keys]
        if len(owners) != 1:
            raise ConfigError(f"parameter {param!r} is unknown or ambiguous; use section.key")
        section, key = owners[0], param
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"unknown parameter {param!r}")
    if SCHEMA[section][key] not in ("num", "int"):
        raise ConfigError(f"parameter {param!r} is not a scalar number")
    return section, key


def set_parameter(s: Scenario, param: str, value: float) -> Scenario:
    """Return a copy of ``s`` with one key replaced; ``param`` is ``key`` or ``section.key``."""
    section, key = resolve_parameter(param)
    cfg = scenario_to_dict(s)
    cfg[section][key] = int(value) if SCHEMA[section][key] == "int" else float(value)
    return scenario_from_dict(cfg)


def with_seed(s: Scenario, seed: int) -> Scenario:
    return replace(s, seed=int(seed))
