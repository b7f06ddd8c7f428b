"""Output directories, manifests and suite aggregation."""
from __future__ import annotations

import datetime as _dt
import hashlib
import os
import platform
import shutil
import time
import traceback
from pathlib import Path

import numpy as np

import smoothlab
from smoothlab import config as cfgmod
from smoothlab import kernels
from smoothlab.estimate_lab.oracles import QuadratureError
from smoothlab.experiments import dumps, execute
from smoothlab.presets import get_preset
from smoothlab.resonance import MorseWindowError
from smoothlab.spectral.solver import SolverBlowup

ENV_OUT = "SMOOTHLAB_OUT"
DEFAULT_OUT = "smoothlab-out"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (SolverBlowup, QuadratureError, MorseWindowError, FloatingPointError)


class OutputExistsError(RuntimeError):
    pass


def output_root(out=None) -> Path:
    return Path(out or os.environ.get(ENV_OUT) or DEFAULT_OUT)


def prepare_dir(path: Path, force=False) -> Path:
    path = Path(path)
    if path.exists() and (not path.is_dir() or any(path.iterdir())):
        if not force:
            raise OutputExistsError(f"{path} exists and is not empty; pass --force to overwrite")
        if path.is_dir():
            shutil.rmtree(path)
        else:
            path.unlink()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, content):
    if isinstance(content, bytes):
        path.write_bytes(content)
    else:
        path.write_text(content)
    return hashlib.sha256(content if isinstance(content, bytes) else content.encode()).hexdigest()


def _environment():
    return {"smoothlab": smoothlab.__version__, "kernel_backend": kernels.BACKEND,
            "python": platform.python_version(), "numpy": np.__version__}


def _manifest(cfg, files, started, elapsed, status, extra=None):
    out = {
        "config": cfg,
        "files": files,
        "status": status,
        "started": started,
        "elapsed_seconds": round(elapsed, 3),
        "environment": _environment(),
    }
    out.update(extra or {})
    return dumps(out)


def run_config(cfg, directory, threads=1):
    """Execute one resolved config into ``directory`` (already prepared).

    Returns ``(exit_status, outcome_or_None)``.
    """
    directory = Path(directory)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            outcome = execute(cfg, threads)
    except NUMERICAL_ERRORS as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                "diagnostics": getattr(exc, "diagnostics", {}), "traceback": traceback.format_exc()}
        files = {"diagnostics.json": _write(directory / "diagnostics.json", dumps(diag))}
        _write(directory / "manifest.json",
               _manifest(cfg, files, started, time.perf_counter() - t0, "numerical_abort"))
        return EXIT_NUMERICAL, None
    files = {}
    for name in sorted(outcome.files):
        files[name] = _write(directory / name, outcome.files[name])
    status = "ok" if outcome.passed else "checks_failed"
    _write(directory / "manifest.json",
           _manifest(cfg, files, started, time.perf_counter() - t0, status, {"checks": outcome.checks}))
    return EXIT_OK, outcome


def with_seed(cfg, seed):
    if seed is None:
        return cfg
    return {**cfg, "seed": int(seed)}


def run_suite(name, directory, seed=None, threads=1, log=None):
    """Run every item of a preset into ``directory/<item>`` and evaluate its criteria.

    Returns ``(exit_status, report)``. The report is deterministic (no timings);
    timings live in the manifests.
    """
    preset = get_preset(name)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    outcomes, items, hard = {}, [], False
    for raw in preset.items:
        cfg = with_seed(cfgmod.validate(raw), seed)
        sub = directory / cfg["name"]
        sub.mkdir(parents=True, exist_ok=True)
        t_item = time.perf_counter()
        status, outcome = run_config(cfg, sub, threads)
        entry = {"name": cfg["name"], "kind": cfg["kind"], "exit_status": status}
        if outcome is not None:
            outcomes[cfg["name"]] = outcome
            entry["checks"] = outcome.checks
        else:
            hard = True
        items.append(entry)
        if log:
            log(f"  {cfg['name']}: {'ok' if status == 0 else 'aborted'} ({time.perf_counter() - t_item:.1f}s)")
    criteria = []
    for crit in preset.criteria:
        try:
            ok, detail = crit.evaluate(outcomes)
        except KeyError as exc:
            ok, detail = False, f"missing item {exc}"
        criteria.append({"label": crit.label, "passed": bool(ok), "detail": detail})
    passed = not hard and all(c["passed"] for c in criteria)
    report = {"preset": name, "statement": preset.statement, "items": items, "criteria": criteria,
              "passed": passed}
    files = {"report.json": _write(directory / "report.json", dumps(report))}
    _write(directory / "manifest.json",
           _manifest({"preset": name, "seed": seed, "threads": threads}, files, started,
                     time.perf_counter() - t0, "passed" if passed else "failed"))
    if hard:
        return EXIT_NUMERICAL, report
    return (EXIT_OK if passed else EXIT_FAILED), report
