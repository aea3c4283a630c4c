"""Experiment configuration: one JSON file describes one experiment.

Validation happens in two layers.  ``load_config`` checks structure, types,
ranges and file existence and reports every violation at once.  Conditions
that need a solve-time quantity (the CFL limit depends on the Hessian bounds
and on ``alpha``) are left to the solver, which raises
:class:`~hyperwave.errors.CFLViolation`.

``inversion.noise`` is a relative level (fraction of the data norm) when
``invert`` synthesizes data from ``alpha``, and the absolute noise norm
when measured data are supplied.

Minimal example::

    {"grid": {"d": 1, "n": 16, "T": 0.5, "m": 64},
     "dictionary": [{"family": "quadratic", "params": {"a": 1.0}}],
     "alpha": [1.0]}
"""

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .energy import (FAMILIES, AdmissibilityThresholds, EnergyDictionary, EnergyEntry,
                     SpatialWeight, partition_weights)
from .errors import ConfigError
from .forward import ProblemSetup
from .grid import Grid, MaterialField
from .inversion import InversionConfig
from .reference import INITIAL_PRESETS, initial_displacement

__all__ = ["SCHEMA", "DEFAULTS", "ExperimentConfig", "load_config", "save_config", "parse_config"]

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_pos_vec = {"type": "array", "items": _pos, "minItems": 1}
_source = {
    "type": "object",
    "properties": {
        "preset": {"enum": sorted(INITIAL_PRESETS)},
        "amplitude": {"type": "number"},
        "file": {"type": "string"},
    },
    "additionalProperties": False,
    "oneOf": [{"required": ["preset"]}, {"required": ["file"]}],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["grid", "dictionary", "alpha"],
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object",
            "required": ["d", "n", "T", "m"],
            "additionalProperties": False,
            "properties": {
                "d": {"type": "integer", "minimum": 1, "maximum": 3},
                "n": {"type": "integer", "minimum": 2},
                "T": _pos,
                "m": {"type": "integer", "minimum": 2},
            },
        },
        "material": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rho": _pos},
        },
        "dictionary": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["family"],
                "additionalProperties": False,
                "properties": {
                    "family": {"enum": sorted(FAMILIES)},
                    "params": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"a": _pos, "b": _nonneg, "c": _nonneg, "eps": _pos},
                    },
                    "weight": {
                        "type": "object",
                        "required": ["type"],
                        "additionalProperties": False,
                        "properties": {
                            "type": {"enum": ["constant", "bump", "partition"]},
                            "lower": _vec,
                            "upper": _vec,
                            "ramp": _pos,
                            "floor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                            "index": {"type": "integer", "minimum": 0},
                            "of": {"type": "integer", "minimum": 1},
                            "axis": {"type": "integer", "minimum": 0},
                        },
                    },
                },
            },
        },
        "alpha": _pos_vec,
        "alpha0": _pos_vec,
        "direction": _vec,
        "thresholds": {
            "type": "object",
            "required": ["kappa", "mu"],
            "additionalProperties": False,
            "properties": {
                "kappa": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                "mu": {"type": "array", "items": _pos, "minItems": 7, "maxItems": 7},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"u0": _source, "u1": _source},
        },
        "force": {"type": "object", "additionalProperties": False,
                  "properties": {"file": {"type": "string"}}, "required": ["file"]},
        "data": {"type": "object", "additionalProperties": False,
                 "properties": {"file": {"type": "string"}}, "required": ["file"]},
        "adjoint_weight": {"type": "object", "additionalProperties": False,
                           "properties": {"file": {"type": "string"}, "preset": {"enum": ["smooth", "random"]}}},
        "inversion": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "omega": {"anyOf": [_pos, {"type": "null"}]},
                "max_iter": {"type": "integer", "minimum": 0},
                "noise": _nonneg,
                "tau_disc": {"type": "number", "exclusiveMinimum": 1},
                "alpha_min": _pos,
                "adjoint": {"enum": ["discrete", "continuous"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"cfl_safety": _pos},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "s_list": _pos_vec,
                "eps_list": _pos_vec,
            },
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}

DEFAULTS = {
    "material": {"rho": 1.0},
    "initial": {"u0": {"preset": "bump"}, "u1": {"preset": "zero"}},
    "adjoint_weight": {"preset": "smooth"},
    "inversion": {"omega": None, "max_iter": 500, "noise": 0.0, "tau_disc": 1.5,
                  "alpha_min": 1e-3, "adjoint": "discrete"},
    "solver": {"cfl_safety": 0.5},
    "verify": {"trials": 20, "s_list": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
               "eps_list": [1e-1, 1e-2, 1e-3, 1e-4]},
    "seed": 0,
}

_ENTRY_DEFAULTS = {"params": {}, "weight": {"type": "constant"}}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _locator(path):
    return "/" + "/".join(str(p) for p in path)


def _semantic_errors(cfg):
    errors = []
    N = len(cfg["dictionary"])
    d = cfg["grid"]["d"]
    for key in ("alpha", "alpha0", "direction"):
        if key in cfg and len(cfg[key]) != N:
            errors.append(f"/{key}: expected {N} entries (one per dictionary entry), got {len(cfg[key])}")
    for i, e in enumerate(cfg["dictionary"]):
        w = e["weight"]
        if w["type"] == "partition":
            for req in ("index", "of"):
                if req not in w:
                    errors.append(f"/dictionary/{i}/weight: partition weight needs '{req}'")
            if "index" in w and "of" in w and w["index"] >= w["of"]:
                errors.append(f"/dictionary/{i}/weight/index: {w['index']} must be below 'of' = {w['of']}")
            if w.get("axis", 0) >= d:
                errors.append(f"/dictionary/{i}/weight/axis: {w['axis']} out of range for d={d}")
        if w["type"] == "bump":
            for req in ("lower", "upper"):
                if req not in w:
                    errors.append(f"/dictionary/{i}/weight: bump weight needs '{req}'")
                elif len(w[req]) != d:
                    errors.append(f"/dictionary/{i}/weight/{req}: expected {d} values, got {len(w[req])}")
        if e["family"] == "quadratic" and "eps" in e["params"]:
            errors.append(f"/dictionary/{i}/params/eps: only the saturating family takes eps")
    for where, ref in _file_refs(cfg):
        if not Path(ref).is_file():
            errors.append(f"{where}: file not found: {ref}")
    return errors


def _file_refs(cfg):
    for name in ("u0", "u1"):
        f = cfg.get("initial", {}).get(name, {}).get("file")
        if f is not None:
            yield f"/initial/{name}/file", f
    for key in ("force", "data", "adjoint_weight"):
        f = cfg.get(key, {}).get("file")
        if f is not None:
            yield f"/{key}/file", f


def parse_config(raw, base_dir="."):
    """Validate a decoded JSON mapping; file paths are resolved against ``base_dir``.

    Raises :class:`ConfigError` listing every violation.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [f"{_locator(e.absolute_path)}: {e.message}"
              for e in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))]
    if errors:
        raise ConfigError(errors)
    cfg = _merge(DEFAULTS, raw)
    cfg["dictionary"] = [_merge(_ENTRY_DEFAULTS, e) for e in cfg["dictionary"]]
    base = Path(base_dir)
    for name in ("u0", "u1"):
        src = cfg["initial"][name]
        if "file" in src:
            src["file"] = str((base / src["file"]).resolve())
    for key in ("force", "data", "adjoint_weight"):
        if "file" in cfg.get(key, {}):
            cfg[key]["file"] = str((base / cfg[key]["file"]).resolve())
    errors = _semantic_errors(cfg)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(cfg)


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as err:
        raise ConfigError([f"{path}: cannot read: {err}"])
    except json.JSONDecodeError as err:
        raise ConfigError([f"{path}: invalid JSON at line {err.lineno}: {err.msg}"])
    return parse_config(raw, path.parent)


def save_config(path, config):
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def _weight(spec, d):
    kind = spec["type"]
    if kind == "constant":
        return SpatialWeight.constant(d)
    if kind == "partition":
        kw = {k: spec[k] for k in ("ramp", "floor") if k in spec}
        return partition_weights(spec["of"], d, spec.get("axis", 0), **kw)[spec["index"]]
    kw = {k: spec[k] for k in ("ramp", "floor") if k in spec}
    return SpatialWeight(tuple(spec["lower"]), tuple(spec["upper"]), **kw)


@dataclass
class ExperimentConfig:
    """Validated configuration with defaults applied (plain nested dict inside)."""

    data: dict

    def to_dict(self):
        return copy.deepcopy(self.data)

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    def grid(self):
        g = self.data["grid"]
        return Grid(g["d"], g["n"], g["T"], g["m"])

    def dictionary(self):
        d = self.data["grid"]["d"]
        entries = []
        for e in self.data["dictionary"]:
            form = FAMILIES[e["family"]](**e["params"])
            entries.append(EnergyEntry(form, _weight(e["weight"], d), d))
        return EnergyDictionary(entries)

    def thresholds(self):
        t = self.data.get("thresholds")
        return None if t is None else AdmissibilityThresholds(tuple(t["kappa"]), tuple(t["mu"]))

    def _nodal(self, grid, src):
        if "file" in src:
            from .io import load_field

            u, _ = load_field(src["file"])
            if u.shape[1:] != grid.shape + (grid.d,):
                raise ConfigError([f"{src['file']}: nodal shape {u.shape[1:]} does not match grid"])
            return u[0]
        return initial_displacement(grid, src["preset"], src.get("amplitude"))

    def setup(self, alpha=None):
        """Build the :class:`ProblemSetup` at ``alpha`` (default: the configured ``alpha``)."""
        from .io import load_field

        grid = self.grid()
        force = None
        if "force" in self.data:
            force, _ = load_field(self.data["force"]["file"], grid)
        return ProblemSetup(
            grid,
            MaterialField.uniform(grid, self.data["material"]["rho"]),
            self.dictionary(),
            self.data["alpha"] if alpha is None else alpha,
            force=force,
            u0=self._nodal(grid, self.data["initial"]["u0"]),
            u1=self._nodal(grid, self.data["initial"]["u1"]),
            cfl_safety=self.data["solver"]["cfl_safety"],
        )

    def inversion(self, noise_level=0.0):
        inv = self.data["inversion"]
        return InversionConfig(omega=inv["omega"], max_iter=inv["max_iter"], noise_level=noise_level,
                               tau_disc=inv["tau_disc"], alpha_min=inv["alpha_min"],
                               adjoint=inv["adjoint"], thresholds=self.thresholds())

    def rng(self):
        return np.random.default_rng(self.data["seed"])
