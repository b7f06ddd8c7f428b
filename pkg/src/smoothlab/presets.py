"""Named experiment suites.

Each preset is a list of items (raw configs, validated like user files) and a
list of criteria evaluated on the item outcomes. The names are part of the
command-line interface and stay fixed; ``statement`` says in plain words what
each suite checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

SMOOTHING_EPS = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 0.9, 1.0, 1.2]


@dataclass(frozen=True)
class Criterion:
    label: str
    evaluate: Callable  # outcomes dict -> (passed, detail)


@dataclass(frozen=True)
class Preset:
    name: str
    statement: str
    items: tuple = ()
    criteria: tuple = field(default_factory=tuple)


def _item(name, kind, params, equation=None, seed=0):
    cfg = {"schema": 1, "kind": kind, "name": name, "seed": seed, "params": params}
    if equation is not None:
        cfg["equation"] = equation
    return cfg


def _beta(o):
    return o.summary["beta"]


def _level_change(a, b):
    la, lb = a.summary["level"], b.summary["level"]
    return abs(lb - la) / la


# ---------------------------------------------------------------------------
# Sublevel estimates
# ---------------------------------------------------------------------------

def _quadratic_presets():
    items = [_item("quadratic-1d", "beta_fit",
                   {"spec": {"kind": "quadratic1d", "N": 128.0}, "expect_beta_max": 0.55,
                    "expect_r2_min": 0.95})]
    for sign, tag in ((1, "plus"), (-1, "minus")):
        for N in (8.0, 16.0, 32.0, 64.0):
            items.append(_item(f"quadratic-2d-{tag}-N{int(N)}", "beta_fit",
                               {"spec": {"kind": "quadratic2d", "sign": sign, "N": N, "samples": 2_000_000}}))

    def one_d(out):
        o = out["quadratic-1d"]
        return _beta(o) <= 0.55 and o.summary["r2"] >= 0.95, \
            f"beta={_beta(o):.4f} r2={o.summary['r2']:.4f}"

    crit = [Criterion("1D quadratic: beta <= 0.55, r2 >= 0.95", one_d)]
    for tag in ("plus", "minus"):
        def slope(out, tag=tag):
            b = [_beta(out[f"quadratic-2d-{tag}-N{N}"]) for N in (8, 32)]
            return max(b) <= 1.05, f"beta(N=8)={b[0]:.4f} beta(N=32)={b[1]:.4f}"

        def level(out, tag=tag):
            c1 = _level_change(out[f"quadratic-2d-{tag}-N8"], out[f"quadratic-2d-{tag}-N16"])
            c2 = _level_change(out[f"quadratic-2d-{tag}-N32"], out[f"quadratic-2d-{tag}-N64"])
            return max(c1, c2) < 0.15, f"level change N8->16 {c1:.3f}, N32->64 {c2:.3f}"

        crit.append(Criterion(f"2D quadratic ({tag}): beta <= 1.05 at N=8,32", slope))
        crit.append(Criterion(f"2D quadratic ({tag}): level change under N doubling < 15%", level))
    return items, crit


def _mkdv_preset():
    items = []
    for s in (0.3, 0.5, 0.2):
        items.append(_item(f"mkdv-comparable-s{s}", "beta_fit",
                           {"spec": {"kind": "mkdv_comparable", "s": s, "samples": 4_000_000,
                                     "search_samples": 20_000}}))

    def below(out):
        b = [_beta(out[f"mkdv-comparable-s{s}"]) for s in (0.3, 0.5)]
        return max(b) <= 1.05, f"beta(s=0.3)={b[0]:.4f} beta(s=0.5)={b[1]:.4f}"

    def above(out):
        b = _beta(out["mkdv-comparable-s0.2"])
        return b > 1.1, f"beta(s=0.2)={b:.4f}"

    return items, [Criterion("comparable mKdV region: beta <= 1.05 for s = 0.3, 0.5", below),
                   Criterion("comparable mKdV region: beta > 1.1 for s = 0.2", above)]


def _sym_zk_case(region, label):
    name = f"sym-zk-{label}"
    spec = {"kind": "equation", "eq_id": "mzk-sym2d", "fixed_set": [0, 2], "integrated_set": [1],
            "s": 0.5, "epsilon": 0.4, "region": region, "N": 16.0, "samples": 400_000,
            "search_samples": 20_000}
    items = [_item(name, "beta_fit", {"spec": spec, "expect_beta_max": 1.05})]

    def crit(out):
        b = _beta(out[name])
        return b <= 1.05, f"beta={b:.4f} flags={out[name].summary['flags']}"

    return items, [Criterion(f"symmetrized ZK, {label}: beta <= 1.05", crit)]


# ---------------------------------------------------------------------------
# Resonance, tau bound, solver
# ---------------------------------------------------------------------------

def _zk3d_preset():
    items = [_item("zk3d-atlas", "resonance_atlas", {"chart": "zk3d", "dichotomy_samples": 1000})]

    def crit(out):
        d = out["zk3d-atlas"].summary["dichotomy"]
        return d["misclassified"] == 0, \
            f"on variety rank>=2: {d['on_ge2']}, off variety rank<=1: {d['off_le1']} of {d['samples']}"

    return items, [Criterion("3D ZK rank dichotomy: zero misclassified of 1000", crit)]


def _tau_preset():
    items = [_item("tau-grid", "tau_bound", {"b": 0.51, "n": 20, "max_separation": 1e4})]

    def crit(out):
        s = out["tau-grid"].summary
        ratios = [round(float(v), 3) for v in s["decade_ratios"]]
        return s["spread"] < 50 and s["no_growth_trend"], f"spread={s['spread']:.3f} decade ratios={ratios}"

    return items, [Criterion("tau integral ratio bounded: spread < 50, no growth trend", crit)]


def _solver_preset():
    items = [
        _item("linear-kdv4", "solve", {"n": 256, "T": 1.0, "linear_only": True, "checks": ["linear"]},
              equation="kdv4"),
        _item("linear-nls2d", "solve", {"dim": 2, "n": 64, "T": 1.0, "linear_only": True,
                                        "checks": ["linear"]}, equation="nls-cubic"),
        _item("convolution-nls-cubic", "solve", {"dim": 2, "n": 16, "T": 0.01, "checks": ["convolution"]},
              equation="nls-cubic"),
        _item("convolution-kdv4", "solve", {"n": 16, "T": 0.01, "checks": ["convolution"]}, equation="kdv4"),
        _item("convolution-sym-zk", "solve", {"n": 16, "T": 0.01, "checks": ["convolution"]},
              equation="mzk-sym2d"),
        _item("mass-kdv4", "solve", {"n": 256, "T": 1.0, "amplitude": 0.5, "checks": ["mass", "hermitian"]},
              equation="kdv4"),
        _item("mass-nls2d", "solve", {"dim": 2, "n": 128, "L": 4.0, "T": 1.0, "amplitude": 0.5,
                                      "checks": ["mass"]}, equation="nls-cubic"),
        _item("order-nls1d", "solve", {"dim": 1, "n": 64, "L": 2.0, "T": 1.0, "amplitude": 1.0,
                                       "checks": ["order"]}, equation="nls-cubic"),
    ]

    def group(names, check_name):
        def ev(out):
            vals = []
            ok = True
            for nm in names:
                for c in out[nm].checks:
                    if c["name"] == check_name:
                        vals.append(f"{nm}: {c['value']:.3e}")
                        ok &= c["passed"]
            return ok and bool(vals), "; ".join(vals)
        return ev

    return items, [
        Criterion("linear-only trajectories match the exact propagator to 1e-12",
                  group(["linear-kdv4", "linear-nls2d"], "linear")),
        Criterion("dealiased nonlinear term equals direct convolution to 1e-10 (n=16)",
                  group(["convolution-nls-cubic", "convolution-kdv4", "convolution-sym-zk"], "convolution")),
        Criterion("mass conserved to 1e-8 over T=1 (n=256 1D, n=128^2 2D)",
                  group(["mass-kdv4", "mass-nls2d"], "mass")),
        Criterion("step-halving order slope 4.0 +/- 0.3", group(["order-nls1d"], "order")),
    ]


SCALING_CASES = (("kdv4", 1, 128), ("mkdv", 1, 128), ("mzk", 2, 64), ("mzk", 3, 32),
                 ("mzk-sym2d", 2, 64), ("nls-cubic", 2, 64), ("nls-quintic", 2, 64))


def _scaling_preset():
    items, names = [], []
    for eq, dim, n in SCALING_CASES:
        name = f"scaling-{eq}-{dim}d"
        names.append(name)
        items.append(_item(name, "solve", {"dim": dim, "n": n, "T": 0.1, "amplitude": 0.1,
                                           "checks": ["amplitude_scaling"]}, equation=eq))

    def ev(out):
        vals, ok = [], True
        for nm in names:
            c = out[nm].checks[0]
            vals.append(f"{nm}: {c['value']:.3f}/{c['threshold']:g}")
            ok &= c["passed"]
        return ok, "; ".join(vals)

    return items, [Criterion("halving the data divides the residual by 2^k within 30%", ev)]


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------

def _verdict(out, name, eps):
    return out[name].summary["verdicts"][out[name].summary["eps_grid"].index(eps)]


def _smoothing(name, equation, s, resolutions, eps_grid, dim=None, **extra):
    params = {"s": s, "eps_grid": eps_grid, "resolutions": resolutions, **extra}
    if dim is not None:
        params["dim"] = dim
    return _item(name, "smoothing_scan", params, equation=equation)


def _expect(name, eps, allowed):
    def ev(out):
        v = _verdict(out, name, eps)
        return v in allowed, f"eps={eps}: {v}"
    return ev


def _theorem1():
    items = [_smoothing("sym-zk-s0.75", "mzk-sym2d", 0.75, [64, 128, 256], [0.0, 0.5, 0.9]),
             _smoothing("sym-zk-s0.3", "mzk-sym2d", 0.3, [64, 128, 256], [0.0, 0.09, 0.5])]
    return items, [
        Criterion("2D symmetrized mZK, s=0.75: eps=0.9 stable",
                  _expect("sym-zk-s0.75", 0.9, ("stable",))),
        Criterion("2D symmetrized mZK, s=0.3: eps=0.5 growing or inconclusive",
                  _expect("sym-zk-s0.3", 0.5, ("growing", "inconclusive"))),
    ]


def _theorem2():
    items = [_smoothing("mzk3d-s1", "mzk", 1.0, [16, 32, 64], [0.0, 0.5, 0.9], dim=3, trials=3)]
    return items, [Criterion("3D mZK, s=1: eps=0.5 stable", _expect("mzk3d-s1", 0.5, ("stable",)))]


def _theorem3():
    # box: the smallest dyadic L whose scan stays within half the runtime budget, so the
    # refinements probe |xi| up to 16..64 rather than the crossover |xi| ~ 1
    items = [_smoothing("nls-cubic-2d-s0.6", "nls-cubic", 0.6, [64, 128, 256], [0.0, 0.4, 0.8, 1.2], dim=2,
                        L=2.0)]
    return items, [Criterion("2D cubic NLS, s=0.6: eps=0.8 stable",
                             _expect("nls-cubic-2d-s0.6", 0.8, ("stable",)))]


def _theorem4():
    items = [_smoothing("nls-quintic-2d-s0.75", "nls-quintic", 0.75, [32, 64, 128], [0.0, 0.5, 0.9],
                        dim=2, trials=3)]
    return items, [Criterion("2D quintic NLS, s=0.75: eps=0.5 stable",
                             _expect("nls-quintic-2d-s0.75", 0.5, ("stable",)))]


def _theorem5():
    items = [_smoothing("kdv4-s0", "kdv4", 0.0, [256, 512, 1024], [0.0, 0.4, 0.9])]
    return items, [
        Criterion("quartic KdV, s=0: eps=0.4 stable", _expect("kdv4-s0", 0.4, ("stable",))),
        Criterion("quartic KdV, s=0: eps=0.9 growing or inconclusive",
                  _expect("kdv4-s0", 0.9, ("growing", "inconclusive"))),
    ]


def _build():
    table = {}

    def add(name, statement, made):
        items, crit = made
        table[name] = Preset(name, statement, tuple(items), tuple(crit))

    add("lemma6", "sublevel measure of p^2 grows like M^(1/2); of p^2 +- q^2 like M up to logs, "
        "with a level that barely moves when the box doubles", _quadratic_presets())
    add("lemma7", "weighted sublevel bound on the comparable-frequency mKdV region, "
        "with the regularity threshold s = 1/4", _mkdv_preset())
    add("prop1-caseA1", "symmetrized 2D mZK sublevel bound, comparable frequencies with a large "
        "cross product", _sym_zk_case("high+ordered+comparable+a1", "case-a1"))
    add("prop1-caseA2", "symmetrized 2D mZK sublevel bound, comparable frequencies with small "
        "cross products", _sym_zk_case("high+ordered+comparable+a2", "case-a2"))
    add("prop1-caseB", "symmetrized 2D mZK sublevel bound, separated frequencies",
        _sym_zk_case("high+ordered+separated", "case-b"))
    add("resonance-zk3d", "Hessian rank of the 3D ZK phase drops to <= 1 exactly on p1 = -p3",
        _zk3d_preset())
    add("tau-bound", "time-frequency convolution of two Japanese-bracket powers is bounded by "
        "<a1 - a2>^(-2b)", _tau_preset())
    add("solver", "spectral solver correctness: exact linear part, exact dealiased products, "
        "conservation and fourth-order accuracy", _solver_preset())
    add("amplitude-scaling", "the Duhamel residual of small smooth data is homogeneous of the "
        "nonlinearity's degree", _scaling_preset())
    add("theorem1", "nonlinear smoothing for the 2D symmetrized mZK flow", _theorem1())
    add("theorem2", "nonlinear smoothing for the 3D mZK flow", _theorem2())
    add("theorem3", "nonlinear smoothing for the 2D cubic NLS flow", _theorem3())
    add("theorem4", "nonlinear smoothing for the 2D quintic NLS flow", _theorem4())
    add("theorem5", "nonlinear smoothing for the quartic KdV flow", _theorem5())
    add("empty", "no items; always passes", ((), ()))
    return table


PRESETS = _build()


def get_preset(name) -> Preset:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]
