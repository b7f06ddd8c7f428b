"""Experiment configuration: TOML files with a versioned schema.

A config looks like::

    schema = 1
    kind = "beta_fit"
    name = "quadratic-1d"
    seed = 0

    [params.spec]
    kind = "quadratic1d"
    N = 128.0

Unknown keys are rejected at every level; missing optional keys are filled
with the defaults below, and the resolved config is what runs and what gets
echoed into the manifest.
"""
from __future__ import annotations

import copy
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
REQUIRED = object()

KINDS = ("sublevel", "beta_fit", "resonance_atlas", "morse_check", "tau_bound",
         "discrete_multilinear", "solve", "smoothing_scan")

TOP_LEVEL = {"schema": int, "kind": str, "name": str, "equation": str, "seed": int,
             "output": str, "params": dict}

# kind -> {param: (type(s), default)}
PARAMS = {
    "sublevel": {
        "spec": (dict, REQUIRED),
        "alpha": (float, 0.0),
        "fixed": (list, []),
        "M": (float, 1.0),
        "samples": (int, None),
        "stream": (int, 0),
    },
    "beta_fit": {
        "spec": (dict, REQUIRED),
        "expect_beta_max": (float, None),
        "expect_beta_min": (float, None),
        "expect_r2_min": (float, None),
    },
    "resonance_atlas": {
        "chart": (str, REQUIRED),
        "seeds_per_axis": (int, 9),
        "rank_tol": (float, 1e-6),
        "dichotomy_samples": (int, 0),
    },
    "morse_check": {
        "chart": (str, REQUIRED),
        "point": (int, 0),
        "radius": (float, 0.05),
        "samples": (int, 1_000_000),
    },
    "tau_bound": {
        "b": (float, 0.51),
        "n": (int, 20),
        "max_separation": (float, 1e4),
    },
    "discrete_multilinear": {
        "s": (float, 0.0),
        "epsilon": (float, 0.0),
        "dim": (int, None),
        "sizes": (list, [16, 32]),
        "trials": (int, 100),
        "b": (float, 0.51),
    },
    "solve": {
        "dim": (int, None),
        "n": (int, 64),
        "L": (float, 8.0),
        "T": (float, 1.0),
        "dt": (float, None),
        "dt_factor": (float, 0.4),
        "data": (str, "smooth"),
        "s": (float, 1.0),
        "amplitude": (float, 0.1),
        "width": (float, 1.0),
        "linear_only": (bool, False),
        "renormalize": (bool, False),
        "focusing": (bool, False),
        "snapshots": (int, 1),
        "checks": (list, []),
    },
    "smoothing_scan": {
        "s": (float, REQUIRED),
        "eps_grid": (list, REQUIRED),
        "resolutions": (list, REQUIRED),
        "t": (float, 0.5),
        "trials": (int, 5),
        "amplitude": (float, 0.05),
        "L": (float, 8.0),
        "dim": (int, None),
        "dt_factor": (float, 2.0),
        "profile": (str, "power_law_loglog"),
        "renormalize": (bool, True),
        "focusing": (bool, False),
    },
}

EQUATION_KINDS = ("discrete_multilinear", "solve", "smoothing_scan")
SOLVE_CHECKS = ("linear", "convolution", "mass", "order", "hermitian", "amplitude_scaling")
DATA_KINDS = ("smooth", "rough", "mode")


class ConfigError(ValueError):
    """Invalid experiment configuration (reported with exit status 2)."""


def _check_type(where, value, typ):
    if typ is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        return float(value) if ok else _fail(where, value, "a number")
    if typ is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
        return value if ok else _fail(where, value, "an integer")
    if typ is bool:
        return value if isinstance(value, bool) else _fail(where, value, "a boolean")
    if typ is str:
        return value if isinstance(value, str) else _fail(where, value, "a string")
    if typ is list:
        return list(value) if isinstance(value, list) else _fail(where, value, "an array")
    if typ is dict:
        return dict(value) if isinstance(value, dict) else _fail(where, value, "a table")
    raise TypeError(typ)


def _fail(where, value, what):
    raise ConfigError(f"{where}: expected {what}, got {value!r}")


def validate(raw: dict) -> dict:
    """Return the resolved config or raise ``ConfigError``."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table")
    unknown = sorted(set(raw) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    for key, typ in TOP_LEVEL.items():
        if key in raw:
            _check_type(key, raw[key], typ)
    if raw.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema must be {SCHEMA_VERSION} (got {raw.get('schema')!r})")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)} (got {kind!r})")
    seed = raw.get("seed", 0)
    if seed < 0 or seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    params = raw.get("params", {})
    schema = PARAMS[kind]
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ConfigError(f"unknown {kind} parameter(s): {', '.join(unknown)}")
    resolved = {}
    for key, (typ, default) in schema.items():
        if key in params:
            resolved[key] = _check_type(f"params.{key}", params[key], typ)
        elif default is REQUIRED:
            raise ConfigError(f"missing required {kind} parameter {key!r}")
        else:
            resolved[key] = copy.deepcopy(default)
    out = {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "name": raw.get("name", kind),
        "seed": seed,
        "params": resolved,
    }
    if "equation" in raw:
        out["equation"] = raw["equation"]
    if "output" in raw:
        out["output"] = raw["output"]
    _validate_kind(out)
    return out


def _validate_kind(cfg):
    kind, p = cfg["kind"], cfg["params"]
    from smoothlab.phase_models import EQUATION_IDS

    if kind in EQUATION_KINDS:
        eq = cfg.get("equation")
        if eq is None:
            raise ConfigError(f"{kind} needs an 'equation'")
        if eq not in EQUATION_IDS:
            raise ConfigError(f"unknown equation {eq!r}; known: {', '.join(EQUATION_IDS)}")
    if kind in ("sublevel", "beta_fit"):
        from smoothlab.estimate_lab.specs import SPEC_KINDS

        spec = p["spec"]
        if spec.get("kind") not in SPEC_KINDS:
            raise ConfigError(f"params.spec.kind must be one of {', '.join(sorted(SPEC_KINDS))}")
    if kind == "smoothing_scan":
        if not p["eps_grid"]:
            raise ConfigError("params.eps_grid must be nonempty")
        if any(not isinstance(e, (int, float)) or isinstance(e, bool) or not 0 <= e <= 1.2
               for e in p["eps_grid"]):
            raise ConfigError("params.eps_grid entries must be numbers in [0, 1.2]")
        res = p["resolutions"]
        if len(res) < 3 or any(not isinstance(n, int) or isinstance(n, bool) for n in res) \
                or sorted(set(res)) != res:
            raise ConfigError("params.resolutions must be >= 3 increasing integers")
        if p["trials"] < 3:
            raise ConfigError("params.trials must be at least 3")
    if kind == "solve":
        bad = [c for c in p["checks"] if c not in SOLVE_CHECKS]
        if bad:
            raise ConfigError(f"unknown solve check(s) {bad}; known: {', '.join(SOLVE_CHECKS)}")
        if p["data"] not in DATA_KINDS:
            raise ConfigError(f"params.data must be one of {', '.join(DATA_KINDS)}")
        if p["T"] <= 0:
            raise ConfigError("params.T must be positive")
    if kind == "discrete_multilinear" and not p["sizes"]:
        raise ConfigError("params.sizes must be nonempty")


def loads(text: str) -> dict:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from None
    return validate(raw)


def load(path) -> dict:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML parse error: {exc}") from None
    return validate(raw)
