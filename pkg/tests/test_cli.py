import json
import subprocess
import sys
from pathlib import Path

import pytest

from smoothlab import config as cfgmod
from smoothlab import presets, runner
from smoothlab.cli import main
from smoothlab.spectral import as_model, linear_propagate, read_checkpoint

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SCAN = """
schema = 1
kind = "smoothing_scan"
equation = "mkdv"
[params]
s = 0.5
eps_grid = {eps}
resolutions = [32, 64, 128]
t = 0.05
trials = 3
"""


# --- config validation ----------------------------------------------------------------

def test_minimal_config_is_resolved():
    cfg = cfgmod.loads('schema = 1\nkind = "tau_bound"\n')
    assert cfg["name"] == "tau_bound" and cfg["seed"] == 0
    assert cfg["params"] == {"b": 0.51, "n": 20, "max_separation": 1e4}


@pytest.mark.parametrize("text,needle", [
    ('schema = 1\nkind = "tau_bound"\ncolour = 1\n', "unknown top-level"),
    ('schema = 1\nkind = "tau_bound"\n[params]\nbee = 1\n', "unknown tau_bound parameter"),
    ('schema = 2\nkind = "tau_bound"\n', "schema"),
    ('schema = 1\nkind = "fit"\n', "kind must be"),
    ('schema = 1\nkind = "tau_bound"\nseed = -1\n', "unsigned"),
    ('schema = 1\nkind = "tau_bound"\n[params]\nn = "20"\n', "an integer"),
    ('schema = 1\nkind = "tau_bound"\n[params]\nb = true\n', "a number"),
    ('schema = 1\nkind = "morse_check"\n', "missing required"),
    ('schema = 1\nkind = "solve"\n', "needs an 'equation'"),
    ('schema = 1\nkind = "solve"\nequation = "burgers"\n', "unknown equation"),
    ('schema = 1\nkind = "solve"\nequation = "kdv4"\n[params]\nchecks = ["speed"]\n', "unknown solve check"),
    ('schema = 1\nkind = "solve"\nequation = "kdv4"\n[params]\ndata = "noise"\n', "params.data"),
    ('schema = 1\nkind = "solve"\nequation = "kdv4"\n[params]\nT = 0.0\n', "positive"),
    ('schema = 1\nkind = "beta_fit"\n[params.spec]\nkind = "cubic"\n', "params.spec.kind"),
    (SCAN.format(eps="[]"), "nonempty"),
    (SCAN.format(eps="[1.5]"), "[0, 1.2]"),
    (SCAN.format(eps="[0.0]").replace("[32, 64, 128]", "[64, 32, 128]"), "increasing"),
    (SCAN.format(eps="[0.0]").replace("trials = 3", "trials = 2"), "trials"),
    ('schema = 1\nkind = "discrete_multilinear"\nequation = "mkdv"\n[params]\nsizes = []\n', "sizes"),
    ("schema = = 1", "TOML parse error"),
])
def test_invalid_configs(text, needle):
    with pytest.raises(cfgmod.ConfigError) as exc:
        cfgmod.loads(text)
    assert needle in str(exc.value)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = cfgmod.load(path)
    assert cfg["kind"] in cfgmod.KINDS


# --- run ---------------------------------------------------------------------------

def test_empty_eps_grid_exits_2(tmp_path, capsys):
    rc = main(["run", "--config", write(tmp_path, SCAN.format(eps="[]")), "--out", str(tmp_path / "o")])
    assert rc == runner.EXIT_CONFIG
    assert "eps_grid must be nonempty" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 2


def test_bad_seed_override_exits_2(tmp_path):
    p = write(tmp_path, 'schema = 1\nkind = "tau_bound"\n')
    assert main(["run", "--config", p, "--seed", str(2**64), "--out", str(tmp_path)]) == 2


def test_bad_spec_arguments_exit_2(tmp_path):
    p = write(tmp_path, 'schema = 1\nkind = "sublevel"\n[params.spec]\nkind = "quadratic1d"\nwidth = 3\n')
    assert main(["run", "--config", p, "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("name", ["tau-bound", "atlas-mkdv", "solve-kdv4", "quadratic-1d"])
def test_run_shipped_config(tmp_path, capsys, name):
    rc = main(["run", "--config", str(CONFIGS / f"{name}.toml"), "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    target = tmp_path / f"{name}-seed0"
    manifest = json.loads((target / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"] == json.loads(json.dumps(cfgmod.load(CONFIGS / f"{name}.toml")))
    for fname in manifest["files"]:
        assert (target / fname).exists()


def test_solve_writes_checkpoints(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "solve-kdv4.toml"), "--out", str(tmp_path)]) == 0
    target = tmp_path / "solve-kdv4-seed0"
    states = sorted(target.glob("state_*.bin"))
    assert [p.name for p in states] == ["state_000.bin", "state_001.bin", "state_002.bin"]
    st, meta = read_checkpoint(states[-1])
    assert st.time == pytest.approx(0.05)
    assert meta["equation"] == "kdv4" and meta["index"] == 2


def test_linear_only_solve_matches_propagator(tmp_path):
    text = ('schema = 1\nkind = "solve"\nequation = "mzk"\n[params]\ndim = 2\nn = 32\nT = 0.5\n'
            'linear_only = true\ndata = "rough"\ns = 0.5\n')
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 0
    d = tmp_path / "o" / "solve-seed0"
    u0, _ = read_checkpoint(d / "state_000.bin")
    u1, _ = read_checkpoint(d / "state_001.bin")
    exact = linear_propagate(u0, 0.5, as_model("mzk", 2, linear_only=True))
    assert abs(u1.coeffs - exact.coeffs).max() <= 1e-12 * abs(u0.coeffs).max()


def test_existing_output_needs_force(tmp_path, capsys):
    cfg = str(CONFIGS / "tau-bound.toml")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "--force" in capsys.readouterr().err
    assert main(["run", "--config", cfg, "--out", str(tmp_path), "--force"]) == 0


def test_seed_override_names_directory(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "tau-bound.toml"), "--out", str(tmp_path),
                 "--seed", "7"]) == 0
    m = json.loads((tmp_path / "tau-bound-seed7" / "manifest.json").read_text())
    assert m["config"]["seed"] == 7


def test_output_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(runner.ENV_OUT, str(tmp_path / "env"))
    assert main(["run", "--config", str(CONFIGS / "tau-bound.toml")]) == 0
    assert (tmp_path / "env" / "tau-bound-seed0" / "summary.json").exists()


def test_numerical_abort_exits_3(tmp_path, capsys):
    text = ('schema = 1\nkind = "solve"\nequation = "kdv4"\n[params]\nn = 32\nL = 1.0\nT = 1.0\n'
            'dt = 0.05\namplitude = 50.0\n')
    rc = main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert rc == runner.EXIT_NUMERICAL
    d = tmp_path / "o" / "solve-seed0"
    diag = json.loads((d / "diagnostics.json").read_text())
    assert diag["error"] == "SolverBlowup" and diag["diagnostics"]["equation"] == "kdv4"
    assert json.loads((d / "manifest.json").read_text())["status"] == "numerical_abort"
    assert "numerical abort" in capsys.readouterr().err


def _artifacts(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir()) if p.name != "manifest.json"}


@pytest.mark.parametrize("name", ["tau-bound", "solve-kdv4", "sublevel-mkdv", "multilinear-nls"])
def test_reruns_are_byte_identical(tmp_path, name):
    cfg = str(CONFIGS / f"{name}.toml")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    seed = cfgmod.load(cfg)["seed"]
    a = _artifacts(tmp_path / "a" / f"{name}-seed{seed}")
    b = _artifacts(tmp_path / "b" / f"{name}-seed{seed}")
    assert a and a == b


def test_different_seed_changes_random_output(tmp_path):
    cfg = str(CONFIGS / "multilinear-nls.toml")
    main(["run", "--config", cfg, "--out", str(tmp_path), "--seed", "1"])
    main(["run", "--config", cfg, "--out", str(tmp_path), "--seed", "2"])
    a = (tmp_path / "multilinear-nls-seed1" / "ratios.csv").read_bytes()
    b = (tmp_path / "multilinear-nls-seed2" / "ratios.csv").read_bytes()
    assert a != b


def test_scan_outputs_on_disk(tmp_path):
    p = write(tmp_path, SCAN.format(eps="[0.0, 0.5]"))
    assert main(["run", "--config", p, "--out", str(tmp_path / "o")]) == 0
    d = tmp_path / "o" / "smoothing_scan-seed0"
    assert (d / "norms.csv").read_text().startswith("eps,n=32,n=64,n=128,verdict")
    assert len((d / "plot_data.csv").read_text().splitlines()) == 7
    rep = json.loads((d / "report.json").read_text())
    assert rep["resolutions"] == [32, 64, 128]


# --- suite and list ------------------------------------------------------------------

def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("lemma6", "theorem5", "amplitude-scaling", "solver"):
        assert name in out
    for kind in cfgmod.KINDS:
        assert kind in out


def test_unknown_preset_exits_2(tmp_path, capsys):
    assert main(["suite", "nope", "--out", str(tmp_path)]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_empty_suite_passes(tmp_path):
    assert main(["suite", "empty", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "empty" / "report.json").read_text())
    assert rep == {"preset": "empty", "statement": presets.PRESETS["empty"].statement, "items": [],
                   "criteria": [], "passed": True}


def test_run_suite_creates_its_directory(tmp_path):
    target = tmp_path / "not" / "yet"
    status, report = runner.run_suite("empty", target)
    assert status == 0 and report["passed"]
    assert (target / "report.json").exists()


def _fake_preset(passes):
    items = (presets._item("tau", "tau_bound", {"n": 6, "max_separation": 100.0}),)
    crit = presets.Criterion("spread is small", lambda out: (passes, f"spread={out['tau'].summary['spread']:.3f}"))
    return presets.Preset("fake", "a tiny preset", items, (crit,))


@pytest.mark.parametrize("passes,code", [(True, 0), (False, 1)])
def test_suite_exit_status(tmp_path, monkeypatch, capsys, passes, code):
    monkeypatch.setitem(presets.PRESETS, "fake", _fake_preset(passes))
    assert main(["suite", "fake", "--out", str(tmp_path)]) == code
    out = capsys.readouterr().out
    assert ("[PASS]" if passes else "[FAIL]") in out
    rep = json.loads((tmp_path / "fake" / "report.json").read_text())
    assert rep["passed"] is passes
    assert (tmp_path / "fake" / "tau" / "ratios.csv").exists()


def test_suite_hard_error_exits_3(tmp_path, monkeypatch):
    items = (presets._item("boom", "solve", {"n": 32, "L": 1.0, "T": 1.0, "dt": 0.05, "amplitude": 50.0},
                           equation="kdv4"),)
    monkeypatch.setitem(presets.PRESETS, "boom", presets.Preset("boom", "blows up", items, ()))
    assert main(["suite", "boom", "--out", str(tmp_path)]) == 3
    rep = json.loads((tmp_path / "boom" / "report.json").read_text())
    assert rep["items"][0]["exit_status"] == 3 and rep["passed"] is False


def test_suite_report_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.setitem(presets.PRESETS, "fake", _fake_preset(True))
    main(["suite", "fake", "--out", str(tmp_path / "a")])
    main(["suite", "fake", "--out", str(tmp_path / "b")])
    for rel in ("report.json", "tau/ratios.csv", "tau/summary.json"):
        assert (tmp_path / "a" / "fake" / rel).read_bytes() == (tmp_path / "b" / "fake" / rel).read_bytes()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "smoothlab", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "presets:" in r.stdout
    r = subprocess.run([sys.executable, "-m", "smoothlab", "run"], capture_output=True, text=True)
    assert r.returncode == 2


def test_every_preset_item_validates():
    for name, pre in presets.PRESETS.items():
        for raw in pre.items:
            cfg = cfgmod.validate(raw)
            assert cfg["kind"] in cfgmod.KINDS, name
