"""Command line: ``smoothlab run|suite|list``.

Exit status: 0 success, 1 suite criteria failed, 2 invalid input (config,
preset name, existing output), 3 numerical abort (diagnostics written).
"""
from __future__ import annotations

import argparse
import sys

from smoothlab import config as cfgmod
from smoothlab import runner
from smoothlab.presets import PRESETS


def _parser():
    p = argparse.ArgumentParser(prog="smoothlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="override the seed (unsigned 64-bit)")
        sp.add_argument("--out", default=None,
                        help=f"output root (default: ${runner.ENV_OUT} or ./{runner.DEFAULT_OUT})")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for dyadic levels")
        sp.add_argument("--force", action="store_true", help="overwrite an existing output directory")

    r = sub.add_parser("run", help="run one experiment config (TOML)")
    r.add_argument("--config", required=True, metavar="PATH")
    common(r)
    s = sub.add_parser("suite", help="run a named preset")
    s.add_argument("preset")
    common(s)
    sub.add_parser("list", help="list presets and experiment kinds")
    return p


def _err(msg):
    print(f"smoothlab: error: {msg}", file=sys.stderr)


def cmd_run(args):
    try:
        cfg = cfgmod.load(args.config)
    except (cfgmod.ConfigError, OSError) as exc:
        _err(str(exc))
        return runner.EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2**64:
        _err("--seed must be an unsigned 64-bit integer")
        return runner.EXIT_CONFIG
    cfg = runner.with_seed(cfg, args.seed)
    root = runner.output_root(args.out or cfg.get("output"))
    target = root / f"{cfg['name']}-seed{cfg['seed']}"
    try:
        runner.prepare_dir(target, args.force)
        status, outcome = runner.run_config(cfg, target, args.threads)
    except runner.OutputExistsError as exc:
        _err(str(exc))
        return runner.EXIT_CONFIG
    except cfgmod.ConfigError as exc:
        _err(str(exc))
        return runner.EXIT_CONFIG
    if status == runner.EXIT_NUMERICAL:
        _err(f"numerical abort; see {target / 'diagnostics.json'}")
        return status
    print(f"{cfg['kind']} {cfg['name']}: wrote {target}")
    for c in outcome.checks:
        print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']} = {c['value']}")
    return runner.EXIT_OK


def cmd_suite(args):
    if args.preset not in PRESETS:
        _err(f"unknown preset {args.preset!r}; known: {', '.join(sorted(PRESETS))}")
        return runner.EXIT_CONFIG
    target = runner.output_root(args.out) / args.preset
    try:
        runner.prepare_dir(target, args.force)
    except runner.OutputExistsError as exc:
        _err(str(exc))
        return runner.EXIT_CONFIG
    print(f"suite {args.preset}: {PRESETS[args.preset].statement}")
    status, report = runner.run_suite(args.preset, target, args.seed, args.threads, log=print)
    for c in report["criteria"]:
        print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['label']}: {c['detail']}")
    print(f"suite {args.preset}: {'PASSED' if report['passed'] else 'FAILED'} -> {target}")
    return status


def cmd_list(args):
    print("presets:")
    for name in sorted(PRESETS):
        pre = PRESETS[name]
        print(f"  {name:<14} {len(pre.items):>2} item(s)  {pre.statement}")
    print("experiment kinds:")
    for kind in cfgmod.KINDS:
        print(f"  {kind}")
    return runner.EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    return {"run": cmd_run, "suite": cmd_suite, "list": cmd_list}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
