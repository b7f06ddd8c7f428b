"""Config-driven experiments.

``execute(cfg)`` dispatches on ``cfg["kind"]`` and returns an ``Outcome``: the
artifact files (name -> text or bytes), a JSON-able summary and a list of
named checks. Nothing here touches the filesystem; ``runner`` does that, which
keeps every artifact a pure function of the resolved config.
"""
from __future__ import annotations

import csv
import io
import json
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from smoothlab import resonance
from smoothlab.estimate_lab import engine, oracles
from smoothlab.estimate_lab.multilinear import discrete_multilinear_check
from smoothlab.estimate_lab.specs import build_spec
from smoothlab.smoothing import (RoughDataSpec, amplitude_scaling, make_rough_data, smooth_bump,
                                 smoothing_scan)
from smoothlab.spectral import (Grid, SpectralState, as_model, brute_force_nonlinear,
                                from_physical, hamiltonian, linear_propagate, mass,
                                nonlinear_term, single_mode, solve, write_checkpoint)


@dataclass
class Outcome:
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def check(name, value, passed, threshold=None, detail=None):
    out = {"name": name, "value": value, "passed": bool(passed)}
    if threshold is not None:
        out["threshold"] = threshold
    if detail is not None:
        out["detail"] = detail
    return out


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------

def _spec(p):
    spec_cfg = dict(p["spec"])
    kind = spec_cfg.pop("kind")
    for key in ("M_range", "fixed_set", "integrated_set", "hints"):
        if key in spec_cfg and isinstance(spec_cfg[key], list):
            spec_cfg[key] = tuple(spec_cfg[key])
    try:
        return build_spec(kind, **spec_cfg)
    except TypeError as exc:
        from smoothlab.config import ConfigError

        raise ConfigError(f"params.spec: {exc}") from None


def run_sublevel(cfg, threads=1):
    p = cfg["params"]
    spec = _spec(p)
    res = engine.sublevel_integral(spec, p["alpha"], p["fixed"], p["M"], cfg["seed"],
                                   p["samples"], p["stream"])
    summary = {"spec": spec.describe(), "alpha": p["alpha"], "fixed": p["fixed"], "M": p["M"],
               "value": res.value, "stderr": res.stderr, "low_confidence": res.low_confidence,
               "n_samples": res.n_samples, "method": res.method}
    return Outcome({"summary.json": dumps(summary)}, summary)


def run_beta_fit(cfg, threads=1):
    p = cfg["params"]
    spec = _spec(p)
    fit = engine.fit_beta(spec, cfg["seed"], workers=threads)
    rows = []
    for (M, v), se, w in zip(fit.samples, fit.stderrs, fit.sup_witness):
        rows.append([M, v, se, w.alpha, ";".join(repr(float(x)) for x in w.fixed),
                     str(bool(v > 0 and se > engine.LOW_CONFIDENCE_RSE * v)).lower()])
    table = _csv(["M", "sup_value", "stderr", "witness_alpha", "witness_fixed", "low_confidence"], rows)
    summary = {"spec": spec.describe(), **fit.summary()}
    checks = []
    if p["expect_beta_max"] is not None:
        checks.append(check("beta_max", fit.beta, fit.beta <= p["expect_beta_max"], p["expect_beta_max"]))
    if p["expect_beta_min"] is not None:
        checks.append(check("beta_min", fit.beta, fit.beta > p["expect_beta_min"], p["expect_beta_min"]))
    if p["expect_r2_min"] is not None:
        checks.append(check("r2_min", fit.r2, fit.r2 >= p["expect_r2_min"], p["expect_r2_min"]))
    return Outcome({"fit.csv": table, "summary.json": dumps(summary)}, summary, checks)


def run_tau_bound(cfg, threads=1):
    p = cfg["params"]
    sw = oracles.tau_bound_sweep(p["b"], p["n"], p["max_separation"])
    rows = []
    grid = sw["grid"]
    for i, a1 in enumerate(grid):
        for j, a2 in enumerate(grid):
            rows.append([float(a1), float(a2), float(abs(a1 - a2)), float(sw["ratios"][i, j])])
    trend_ok = oracles.no_growth_trend(sw["decade_ratios"], sw["constant"])
    summary = {"b": p["b"], "n": p["n"], "max_separation": p["max_separation"],
               "max_ratio": sw["max_ratio"], "min_ratio": sw["min_ratio"], "spread": sw["spread"],
               "decade_separations": [10.0 ** e for e in sw["decades"]],
               "decade_ratios": sw["decade_ratios"], "constant": sw["constant"],
               "no_growth_trend": trend_ok}
    checks = [check("spread", sw["spread"], sw["spread"] < 50.0, 50.0),
              check("no_growth_trend", trend_ok, trend_ok)]
    return Outcome({"ratios.csv": _csv(["a1", "a2", "separation", "ratio"], rows),
                    "summary.json": dumps(summary)}, summary, checks)


def run_discrete_multilinear(cfg, threads=1):
    p = cfg["params"]
    rows, maxima = [], []
    for n in p["sizes"]:
        res = discrete_multilinear_check(cfg["equation"], p["s"], p["epsilon"], int(n), p["trials"],
                                         cfg["seed"], p["b"], dim=p["dim"])
        maxima.append(res.max_ratio)
        for t, (l, r, q) in enumerate(zip(res.lhs, res.rhs, res.ratios)):
            rows.append([int(n), t, float(l), float(r), float(q)])
    growth = [b / a if a > 0 else None for a, b in zip(maxima, maxima[1:])]
    summary = {"equation": cfg["equation"], "s": p["s"], "epsilon": p["epsilon"], "sizes": p["sizes"],
               "max_ratios": maxima, "growth_under_doubling": growth, "b": p["b"],
               "b_prime": p["b"] - 1.0 + 0.01}
    return Outcome({"ratios.csv": _csv(["grid_size", "trial", "lhs", "rhs", "ratio"], rows),
                    "summary.json": dumps(summary)}, summary)


# ---------------------------------------------------------------------------
# Resonance
# ---------------------------------------------------------------------------

def run_resonance_atlas(cfg, threads=1):
    p = cfg["params"]
    at = resonance.atlas(p["chart"], seeds_per_axis=p["seeds_per_axis"], rank_tol=p["rank_tol"])
    summary = {"chart": p["chart"], "n_points": len(at["points"]),
               "labels": [pt["class"] for pt in at["points"]], "diagnostics": at["diagnostics"]}
    checks = [check("grad_norm", max((pt["grad_norm"] for pt in at["points"]), default=0.0),
                    all(pt["grad_norm"] <= resonance.GRAD_TOL for pt in at["points"]), resonance.GRAD_TOL)]
    if p["dichotomy_samples"]:
        d = resonance.zk_rank_dichotomy(p["dichotomy_samples"], rank_tol=p["rank_tol"], seed=cfg["seed"])
        summary["dichotomy"] = d
        checks.append(check("misclassified", d["misclassified"], d["misclassified"] == 0, 0))
    return Outcome({"atlas.json": dumps(at), "summary.json": dumps(summary)}, summary, checks)


def run_morse_check(cfg, threads=1):
    p = cfg["params"]
    c = resonance.NAMED_CHARTS[p["chart"]] if p["chart"] in resonance.NAMED_CHARTS else None
    if c is None:
        from smoothlab.config import ConfigError

        raise ConfigError(f"unknown chart {p['chart']!r}")
    chart = resonance.build_chart(c["equation"], c["fixed_block"], c["free"], c.get("dependent"), c.get("dim"))
    pts, _ = resonance.find_critical_points(c["equation"], c["fixed_block"], c["free"], c.get("dependent"),
                                            dim=c.get("dim"))
    pts = [q for q in pts if resonance.classify(q) != "degenerate"]
    if not 0 <= p["point"] < len(pts):
        from smoothlab.config import ConfigError

        raise ConfigError(f"params.point out of range (chart has {len(pts)} usable points)")
    pt = pts[p["point"]]
    rep = resonance.morse_window_check(chart, pt, p["radius"], p["samples"])
    summary = {"chart": p["chart"], "point": list(pt.location), **rep}
    checks = [check("exponent", rep["exponent"], rep["within_tolerance"], rep["model_exponent"])]
    return Outcome({"summary.json": dumps(summary)}, summary, checks)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

def initial_data(model, grid: Grid, p, seed) -> SpectralState:
    """Smooth Gaussian bump, rough random data, or a single mode, per ``params.data``."""
    kind = p["data"]
    if kind == "rough":
        return make_rough_data(RoughDataSpec(p["s"], seed, p["amplitude"]), grid, real=model.real)
    if kind == "mode":
        return single_mode(grid, [1] * grid.dim, p["amplitude"], real=model.real)
    return smooth_bump(grid, p["amplitude"], p["width"])


def _order_check(model, u0, T, base_steps=8, levels=4):
    """Errors against a fine reference for ``base_steps * 2^j`` steps; returns (errors, slopes)."""
    ref = solve(u0, T, T / (base_steps * 2 ** (levels + 2)), model).final.coeffs
    errs = []
    for j in range(levels):
        m = base_steps * 2 ** j
        errs.append(float(np.max(np.abs(solve(u0, T, T / m, model).final.coeffs - ref))))
    slopes = [float(np.log2(a / b)) for a, b in zip(errs, errs[1:])]
    return errs, slopes


def run_solve(cfg, threads=1):
    p = cfg["params"]
    model = as_model(cfg["equation"], p["dim"], p["focusing"], p["linear_only"], p["renormalize"])
    grid = Grid(model.equation.dim, p["n"], p["L"])
    u0 = initial_data(model, grid, p, cfg["seed"])
    dt = p["dt"]
    if dt is None:
        from smoothlab.spectral.solver import default_dt

        dt = default_dt(model, grid, p["dt_factor"])
        dt = p["T"] / max(1, int(np.ceil(p["T"] / dt - 1e-9)))
    traj = solve(u0, p["T"], dt, model, p["snapshots"])
    files = {}
    meta = {"equation": model.equation.id, "seed": cfg["seed"], "linear_only": p["linear_only"],
            "renormalize": p["renormalize"], "focusing": p["focusing"], "dt": traj.dt}
    with tempfile.TemporaryDirectory() as tmp:
        for i, st in enumerate(traj.states):
            path = Path(tmp) / f"state_{i:03d}.bin"
            write_checkpoint(path, st, {**meta, "index": i})
            files[path.name] = path.read_bytes()
            files[path.name + ".json"] = (Path(str(path) + ".json")).read_text()
    m0, m1 = mass(u0), mass(traj.final)
    summary = {"equation": model.equation.id, "dim": grid.dim, "n": grid.n, "L": grid.L, "T": p["T"],
               "dt": traj.dt, "steps": traj.steps, "mass_initial": m0, "mass_final": m1,
               "mass_rel_change": abs(m1 - m0) / m0 if m0 > 0 else 0.0}
    if not (p["linear_only"] or p["renormalize"]):
        summary.update(energy_initial=hamiltonian(u0, model), energy_final=hamiltonian(traj.final, model))
    checks = []
    for name in p["checks"]:
        checks.append(_solver_check(name, model, grid, u0, traj, p, cfg["seed"]))
    summary["checks"] = checks
    files["summary.json"] = dumps(summary)
    return Outcome(files, summary, checks)


def _solver_check(name, model, grid, u0, traj, p, seed):
    if name == "linear":
        lin = as_model(model.equation, linear_only=True)
        got = solve(u0, p["T"], traj.dt, lin).final.coeffs
        exact = linear_propagate(u0, p["T"], lin).coeffs
        err = float(np.max(np.abs(got - exact)))
        return check("linear", err, err <= 1e-12, 1e-12)
    if name == "convolution":
        g16 = Grid(grid.dim, 16, grid.L)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 16]))
        c = rng.standard_normal(g16.shape) + 1j * rng.standard_normal(g16.shape)
        st = SpectralState(g16, np.where(g16.mask, c, 0.0))
        if model.real:
            st = from_physical(g16, st.physical().real)
        plain = as_model(model.equation)
        err = float(np.max(np.abs(nonlinear_term(st, plain).coeffs - brute_force_nonlinear(st, plain).coeffs)))
        return check("convolution", err, err <= 1e-10, 1e-10)
    if name == "mass":
        m0, m1 = mass(u0), mass(traj.final)
        rel = abs(m1 - m0) / m0
        return check("mass", rel, rel <= 1e-8, 1e-8)
    if name == "order":
        errs, slopes = _order_check(model, u0, p["T"])
        slope = slopes[-1]
        return check("order", slope, abs(slope - 4.0) <= 0.3, 4.0, {"errors": errs, "slopes": slopes})
    if name == "hermitian":
        worst = max(st.hermitian_defect() for st in traj.states)
        return check("hermitian", worst, worst <= 1e-12, 1e-12)
    if name == "amplitude_scaling":
        rep = amplitude_scaling(model, u0, p["T"], p["dt_factor"], model.renormalize)
        return check("amplitude_scaling", rep["ratio"], rep["within_tolerance"], rep["expected"], rep)
    raise ValueError(name)


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------

def run_smoothing_scan(cfg, threads=1):
    p = cfg["params"]
    rep = smoothing_scan(cfg["equation"], p["s"], p["eps_grid"], p["resolutions"], p["t"], p["trials"],
                         cfg["seed"], p["amplitude"], p["L"], p["dim"], p["dt_factor"], p["profile"],
                         p["renormalize"], p["focusing"])
    summary = json.loads(rep.to_json())
    return Outcome({"report.json": rep.to_json(), "norms.csv": rep.to_csv(),
                    "plot_data.csv": rep.plot_data()}, summary)


RUNNERS = {
    "sublevel": run_sublevel,
    "beta_fit": run_beta_fit,
    "resonance_atlas": run_resonance_atlas,
    "morse_check": run_morse_check,
    "tau_bound": run_tau_bound,
    "discrete_multilinear": run_discrete_multilinear,
    "solve": run_solve,
    "smoothing_scan": run_smoothing_scan,
}


def execute(cfg, threads=1) -> Outcome:
    return RUNNERS[cfg["kind"]](cfg, threads)
