"""`simrun` command line: validate, run, batch, serve and thruster-response."""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from pathlib import Path

from .scenario import ScenarioError, validate_config

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _load(path, overrides=None):
    cfg = validate_config(path)
    if overrides:
        data = dict(cfg.raw)
        data.update(overrides)
        from .scenario import parse_config
        cfg, diags = parse_config(data)
        if diags:
            raise ScenarioError(diags)
    return cfg


def cmd_validate(args):
    try:
        validate_config(args.config)
    except ScenarioError as e:
        for d in e.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_run(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.duration is not None:
        overrides["duration"] = args.duration
    try:
        cfg = _load(args.config, overrides)
    except ScenarioError as e:
        for d in e.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    from .runner import run_scenario
    try:
        manifest = run_scenario(cfg, args.out)
    except Exception as e:  # noqa: BLE001 - report any runtime failure via exit code
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {sum(len(v) for v in manifest['outputs'].values())} sensor files to {args.out}")
    return EXIT_OK


def _run_one(config_path, out_dir):
    from .runner import run_scenario
    cfg = validate_config(config_path)
    run_scenario(cfg, out_dir)
    return config_path


def cmd_batch(args):
    jobs = []
    for path in args.configs:
        out = Path(args.out) / Path(path).stem
        jobs.append((path, str(out)))
    try:
        for path, _ in jobs:
            validate_config(path)
    except ScenarioError as e:
        for d in e.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for done in pool.map(_run_one, *zip(*jobs)):
                print(f"finished {done}")
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_serve(args):
    try:
        cfg = validate_config(args.config)
    except ScenarioError as e:
        for d in e.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    host, _, port = args.listen.rpartition(":")
    from .envserver import serve
    try:
        serve(cfg, host or "127.0.0.1", int(port))
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_thruster_response(args):
    from . import thrusters as thr

    rotor_spec = json.loads(args.rotor)
    gen_spec = json.loads(args.generation)
    from .scenario import _generation_from, _rotor_from
    diags = []
    rotor = _rotor_from(rotor_spec, diags, "rotor")
    gen = _generation_from(gen_spec, diags, "generation")
    if diags or rotor is None or gen is None:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION

    th = thr.Thruster(rotor, gen)
    n = int(round(args.duration / args.dt))
    writer = csv.writer(sys.stdout if args.out == "-" else open(args.out, "w", newline=""))
    writer.writerow(("t", "input", "omega", "thrust", "torque"))
    for i in range(1, n + 1):
        t = i * args.dt
        thrust, torque = th.step(args.input, args.dt)
        writer.writerow((f"{t:.6f}", f"{args.input:.6f}", f"{th.state.omega:.9f}",
                         f"{thrust:.9f}", f"{torque:.9f}"))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="simrun", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="run a scenario headless")
    r.add_argument("config")
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--duration", type=float)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run several scenarios in parallel")
    b.add_argument("configs", nargs="+")
    b.add_argument("--out", required=True)
    b.add_argument("--jobs", type=int, default=2)
    b.set_defaults(func=cmd_batch)

    s = sub.add_parser("serve", help="expose a scenario as a step/reset environment")
    s.add_argument("config")
    s.add_argument("--listen", default="127.0.0.1:0")
    s.set_defaults(func=cmd_serve)

    t = sub.add_parser("thruster-response", help="emit a thruster step-response CSV")
    t.add_argument("--rotor", required=True, help='JSON, e.g. {"type":"first_order","tau":0.5}')
    t.add_argument("--generation", required=True, help='JSON, e.g. {"type":"quadratic","ct":0.05}')
    t.add_argument("--input", type=float, default=10.0)
    t.add_argument("--duration", type=float, default=5.0)
    t.add_argument("--dt", type=float, default=1e-3)
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_thruster_response)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
