"""Run configuration: a versioned JSON document describing one run or batch.

The file is a complete record of a run. Every section is optional on load
and falls back to the shipped defaults; unknown keys are rejected so typos
do not silently change a run. Validation errors name the offending key as a
dotted path (``grid.N``, ``vehicle.T_min``).

Angles in the ``vehicle`` section are radians. Axis 0 of every vector is
vertical ("up").
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
import json
import math
from importlib import resources

import numpy as np

from . import rocket6dof as r6
from .discretizer import Grid
from .pipg import PipgConfig
from .scp import Problem, ScalingPair, ScpConfig, ScpWeights

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    """The file is not valid JSON or has the wrong overall shape."""


class ConfigValidationError(ConfigError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "notes": (
        "Nondimensional defaults tuned so the nominal landing converges. "
        "They are not published reference values for any real vehicle."
    ),
    "vehicle": r6.VehicleParams().to_dict(),
    "boundary": {
        "m_initial": 2.0,
        "r_initial": [7.5, 4.5, 1.5],
        "v_initial": [-1.0, -1.0, 0.0],
        "q_initial": [1.0, 0.0, 0.0, 0.0],
        "w_initial": [0.0, 0.0, 0.0],
        "r_final": [0.0, 0.0, 0.0],
        "v_final": [0.0, 0.0, 0.0],
        "q_final": [1.0, 0.0, 0.0, 0.0],
        "w_final": [0.0, 0.0, 0.0],
    },
    "grid": {"N": 10, "steps": 16},
    "time": {"t_f_guess": 5.0, "s_min": 1.0, "s_max": 20.0},
    "weights": {"w_cost": 1.0, "w_prox": 0.1, "w_ep": 100.0, "epsilon_relax": 1e-9},
    "scaling": {
        "mass": 1.0,
        "position": 8.0,
        "velocity": 3.0,
        "quaternion": 1.0,
        "angular_rate": 1.0,
        "violation": 1e-3,
        "violation_bounds": [1e-4, 1.0],
        "thrust": 4.0,
        "torque": 0.05,
        "dilation": 5.0,
    },
    "scp": {
        "max_iters": 25,
        "tol_feas": 1e-6,
        "tol_step": 1e-5,
        "adaptive_prox": True,
        "ratio_accept": 0.1,
        "ratio_good": 0.75,
        "prox_grow": 4.0,
        "prox_shrink": 0.5,
        "prox_max": 1e8,
        "omega_per_prox": 100.0,
        "reset_relaxation_duals": False,
    },
    "pipg": {
        "rho": 1.6,
        "j_max": 2500,
        "j_check": 25,
        "eps_abs": 1e-9,
        "eps_rel": 1e-8,
        "eps_buff": 0.05,
        "power_eps_abs": 1e-12,
        "power_eps_rel": 1e-9,
        "power_j_max": 500,
    },
    "dispersion": {"low": [6.0, 3.0, 1.0], "high": [9.0, 6.0, 2.0]},
    "montecarlo": {"batch_size": 256, "workers": 1, "converged_floor": 0.95, "ctcs_tolerance": 1e-4},
    "seed": 0,
    "output_dir": "out",
}


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigValidationError(path or "<root>", "expected an object")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        key_path = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigValidationError(key_path, "unknown key")
        if isinstance(defaults[key], dict) and key != "vehicle":
            out[key] = _merge(defaults[key], value, key_path)
        elif key == "vehicle":
            if not isinstance(value, dict):
                raise ConfigValidationError(key_path, "expected an object")
            for vk in value:
                if vk not in defaults["vehicle"]:
                    raise ConfigValidationError(f"{key_path}.{vk}", "unknown key")
            out[key].update(copy.deepcopy(value))
        else:
            out[key] = copy.deepcopy(value)
    return out


def _vector(data, key, size):
    section, name = key.split(".")
    value = data[section][name]
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigValidationError(key, "expected a list of numbers") from None
    if arr.shape != (size,):
        raise ConfigValidationError(key, f"expected {size} numbers, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigValidationError(key, "entries must be finite")
    return arr


def _number(data, key, lo=None, hi=None, strict_lo=False, integer=False):
    node = data
    for part in key.split("."):
        node = node[part]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigValidationError(key, "expected a number")
    if integer and (not isinstance(node, int)):
        raise ConfigValidationError(key, "expected an integer")
    if not math.isfinite(node):
        raise ConfigValidationError(key, "must be finite")
    if lo is not None and (node <= lo if strict_lo else node < lo):
        raise ConfigValidationError(key, f"must be {'>' if strict_lo else '>='} {lo}, got {node}")
    if hi is not None and node > hi:
        raise ConfigValidationError(key, f"must be <= {hi}, got {node}")
    return node


@dataclass
class RunConfig:
    """Validated configuration; ``data`` is the full JSON document."""

    data: dict

    @classmethod
    def from_dict(cls, given):
        data = _merge(DEFAULTS, given, "")
        if data["schema_version"] != SCHEMA_VERSION:
            raise ConfigValidationError("schema_version", f"unsupported version {data['schema_version']}")
        cfg = cls(data)
        cfg.validate()
        return cfg

    # -- validation ---------------------------------------------------------

    def validate(self):
        d = self.data
        _number(d, "grid.N", lo=2, integer=True)
        _number(d, "grid.steps", lo=1, integer=True)
        _number(d, "time.t_f_guess", lo=0.0, strict_lo=True)
        s_min = _number(d, "time.s_min", lo=0.0, strict_lo=True)
        s_max = _number(d, "time.s_max", lo=0.0, strict_lo=True)
        if s_min > s_max:
            raise ConfigValidationError("time.s_min", f"must not exceed time.s_max ({s_min} > {s_max})")
        for name in ("w_cost", "w_prox", "w_ep", "epsilon_relax"):
            _number(d, f"weights.{name}", lo=0.0, strict_lo=True)
        for name in ("mass", "position", "velocity", "quaternion", "angular_rate", "violation", "thrust", "torque", "dilation"):
            _number(d, f"scaling.{name}", lo=0.0, strict_lo=True)
        vb = d["scaling"]["violation_bounds"]
        if vb is not None:
            lo_hi = _vector(d, "scaling.violation_bounds", 2)
            if not 0.0 < lo_hi[0] <= lo_hi[1]:
                raise ConfigValidationError("scaling.violation_bounds", "require 0 < low <= high")
        for name, size in (("r_initial", 3), ("v_initial", 3), ("q_initial", 4), ("w_initial", 3),
                           ("r_final", 3), ("v_final", 3), ("q_final", 4), ("w_final", 3)):
            _vector(d, f"boundary.{name}", size)
        for name in ("q_initial", "q_final"):
            q = _vector(d, f"boundary.{name}", 4)
            if abs(np.linalg.norm(q) - 1.0) > 1e-9:
                raise ConfigValidationError(f"boundary.{name}", "quaternion must have unit norm")
        m_i = _number(d, "boundary.m_initial", lo=0.0, strict_lo=True)
        lo = _vector(d, "dispersion.low", 3)
        hi = _vector(d, "dispersion.high", 3)
        if np.any(lo > hi):
            raise ConfigValidationError("dispersion.low", "must be <= dispersion.high per axis")
        _number(d, "montecarlo.batch_size", lo=1, integer=True)
        _number(d, "montecarlo.workers", lo=1, integer=True)
        _number(d, "montecarlo.converged_floor", lo=0.0, hi=1.0)
        _number(d, "montecarlo.ctcs_tolerance", lo=0.0, strict_lo=True)
        seed = _number(d, "seed", lo=0, integer=True)
        if seed >= 2**64:
            raise ConfigValidationError("seed", "must fit in 64 bits")
        if not isinstance(d["notes"], str):
            raise ConfigValidationError("notes", "expected a string")
        if not isinstance(d["output_dir"], str):
            raise ConfigValidationError("output_dir", "expected a string")
        # embedded types carry their own invariants; report them under their key
        try:
            params = self.vehicle_params()
        except (TypeError, ValueError) as exc:
            raise ConfigValidationError(_vehicle_key(str(exc)), str(exc)) from None
        if m_i <= params.m_dry:
            raise ConfigValidationError("boundary.m_initial", "must exceed vehicle.m_dry")
        for section, build in (("scp", self.scp_config), ("pipg", self.pipg_config)):
            try:
                build()
            except (TypeError, ValueError) as exc:
                raise ConfigValidationError(section, str(exc)) from None

    # -- typed views --------------------------------------------------------

    def vehicle_params(self):
        return r6.VehicleParams.from_dict(copy.deepcopy(self.data["vehicle"]))

    def weights(self):
        return ScpWeights(**self.data["weights"])

    def pipg_config(self):
        return PipgConfig(**self.data["pipg"])

    def scp_config(self):
        s = dict(self.data["scp"])
        vb = self.data["scaling"]["violation_bounds"]
        return ScpConfig(
            pipg=self.pipg_config(),
            seed=self.data["seed"],
            y_scale_bounds=None if vb is None else tuple(float(v) for v in vb),
            **s,
        )

    def scaling(self):
        sc = self.data["scaling"]
        Px = np.array(
            [sc["mass"]] + [sc["position"]] * 3 + [sc["velocity"]] * 3 + [sc["quaternion"]] * 4
            + [sc["angular_rate"]] * 3 + [sc["violation"]],
            dtype=float,
        )
        Pu = np.array([sc["thrust"]] * 3 + [sc["torque"]] * 3 + [sc["dilation"]], dtype=float)
        return ScalingPair(Px, Pu)

    def nominal_problem(self):
        d = self.data
        b = d["boundary"]
        x_init = np.concatenate(
            [[b["m_initial"]], b["r_initial"], b["v_initial"], b["q_initial"], b["w_initial"]]
        ).astype(float)
        # every model state but the mass is fixed at the final time
        idx_final = np.arange(1, r6.N_STATE)
        z_final = np.concatenate([b["r_final"], b["v_final"], b["q_final"], b["w_final"]]).astype(float)
        e_cost = np.zeros(r6.N_STATE)
        e_cost[r6.IDX_M] = -1.0
        params = self.vehicle_params()
        return Problem(
            hooks=r6.hooks(params),
            grid=Grid.uniform(d["grid"]["N"]),
            x_init=x_init,
            idx_final=idx_final,
            z_final=z_final,
            s_min=d["time"]["s_min"],
            s_max=d["time"]["s_max"],
            e_cost=e_cost,
            scaling=self.scaling(),
            weights=self.weights(),
            steps=d["grid"]["steps"],
            t_f_guess=d["time"]["t_f_guess"],
            params=params,
            quaternion_slice=r6.IDX_Q,
        )

    def dispersion(self):
        from .montecarlo import DispersionSpec

        ds = self.data["dispersion"]
        return DispersionSpec(low=tuple(ds["low"]), high=tuple(ds["high"]), seed=self.data["seed"])

    def override(self, dotted, value):
        """Return a copy with one field replaced (``"montecarlo.workers"``)."""
        data = copy.deepcopy(self.data)
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
        return RunConfig.from_dict(data)


def _vehicle_key(message):
    for name in r6.VehicleParams().to_dict():
        if name in message:
            return f"vehicle.{name}"
    return "vehicle"


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    try:
        given = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    return RunConfig.from_dict(given)


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.data, fh, indent=2)
        fh.write("\n")


def default_config():
    text = resources.files("proxscp").joinpath("data/default.cfg").read_text(encoding="utf-8")
    return RunConfig.from_dict(json.loads(text))
