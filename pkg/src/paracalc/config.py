"""Experiment configuration: YAML file + command-line overrides, schema-checked."""

import copy
import json
from importlib import resources

import jsonschema
import yaml

__all__ = ["ConfigError", "DEFAULTS", "load_schema", "load_config_file", "merge", "validate",
           "build_config"]


class ConfigError(ValueError):
    """Schema violation or unreadable configuration."""


DEFAULTS = {
    "output": "paracalc-out",
    "grid": {"dim": 1, "n": 4096, "partition": "smooth"},
    "seeds": 8,
    "law": "gaussian-holder",
    "field": {"alpha": 0.5, "seed": 0, "tolerance": 0.15},
    "backend": {"backend": "lp", "b": 2},
    "taylor": {"fn": "sin", "order": 3, "alpha": 0.5, "flavor": "plain"},
    "noise": {"alpha": 0.6, "eps": 1e-2, "seed": 0, "amplitude": 1.0},
    "solver": {"fn": "sin", "T": 0.25, "steps": 128, "max_iters": 50, "fp_tol": 1e-8,
               "alpha": 0.6, "beta": 0.55, "oracle_tol": 1e-3},
    "schauder": {"beta": -1.4, "eps": 0.05},
}


def load_schema():
    with resources.files("paracalc").joinpath("schema.json").open() as fh:
        return json.load(fh)


def load_config_file(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def merge(base, override):
    """Recursive dict merge; values in ``override`` win."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(cfg):
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
                 for e in errors]
        raise ConfigError("configuration does not match the schema:\n" + "\n".join(lines))
    return cfg


def build_config(command, file_cfg=None, overrides=None):
    """Defaults <- config file <- command-line overrides, then validation.

    The file and the overrides are validated as given (so unknown keys are
    rejected) before the defaults are filled in.
    """
    user = merge(file_cfg or {}, overrides or {})
    if "command" in user and user["command"] != command:
        raise ConfigError(f"config is for command {user['command']!r}, not {command!r}")
    user["command"] = command
    validate(user)
    return validate(merge(DEFAULTS, user))
