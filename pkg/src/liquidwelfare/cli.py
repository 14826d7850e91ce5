"""Command-line front end.

    liquidwelfare run <mechanism> <file>
    liquidwelfare audit <mechanism> (<file> | --random N COUNT --seed S)
    liquidwelfare experiment <config.json>
    liquidwelfare oracle <file> [--resolution M]

Exit codes: 0 ok, 1 a property check failed, 2 usage or input error.
``LIQUID_LOG`` (error, info, debug) sets the log level.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .audit import FAIL, audit_suite, random_problem
from .errors import LiquidWelfareError, ParseError
from .experiment import ExperimentConfig, run_experiment
from .mechanisms import REGISTRY, get
from .oracle import optimal_lw

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("liquidwelfare")


def _problem_for(mech, path: str):
    inst, market = io.load(path)
    if mech.problem_kind == "matching":
        if market is None:
            raise ParseError(f"{path}: {mech.name} needs a \"matching\" block")
        return market
    if inst is None:
        raise ParseError(f"{path}: document has no bidders")
    return inst


def cmd_run(args) -> int:
    mech = get(args.mechanism)
    problem = _problem_for(mech, args.file)
    out = mech.run(problem, args.seed) if mech.seeded else mech.run(problem)
    lw = mech.liquid_welfare(problem, out)
    opt = mech.optimum(problem)
    from .audit import ratio
    r = ratio(opt, lw)
    if args.json:
        doc = out.to_dict()
        doc.update(liquid_welfare=lw, optimum=opt, ratio=r)
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    print(f"mechanism  {mech.name}")
    print(f"{'bidder':>6}  {'x':>12}  {'payment':>12}")
    for i in range(problem.n):
        x = out.allocation[i]
        xs = f"item {int(np.argmax(x))}" if np.ndim(x) else f"{x:.6g}"
        print(f"{i:>6}  {xs:>12}  {out.payments[i]:>12.6g}")
    print(f"liquid welfare  {lw:.6g}")
    print(f"optimum         {opt:.6g}")
    print(f"ratio           {r:.6g}")
    if out.diagnostics:
        print("diagnostics     " + json.dumps(out.to_dict()["diagnostics"]))
    return EXIT_OK


def cmd_audit(args) -> int:
    mech = get(args.mechanism)
    if args.random:
        n, count = args.random
        children = np.random.SeedSequence(args.seed).spawn(count)
        problems = (random_problem(mech, np.random.default_rng(c), n, args.generator) for c in children)
    elif args.file:
        problems = iter([_problem_for(mech, args.file)])
    else:
        raise ParseError("audit needs an instance file or --random N COUNT")
    failed = passed = 0
    for k, problem in enumerate(problems):
        for rep in audit_suite(mech, problem):
            if rep.verdict == FAIL:
                failed += 1
                print(json.dumps({"instance": k, **rep.to_dict()}))
            else:
                passed += 1
                if args.verbose or not args.random:
                    print(json.dumps({"instance": k, **rep.to_dict()}))
    print(f"{mech.name}: {passed} checks ok, {failed} failed", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_experiment(args) -> int:
    try:
        cfg = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.config}: {exc}") from exc
    if args.output:
        cfg.output = args.output
    text = run_experiment(cfg)
    if cfg.output:
        Path(cfg.output).write_text(text)
        log.info("wrote %s", cfg.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst, _ = io.load(args.file)
    if inst is None:
        raise ParseError(f"{args.file}: document has no bidders")
    from .errors import ResolutionTooSmall
    if args.resolution < inst.n:
        raise ResolutionTooSmall(f"resolution {args.resolution} is below the number of bidders {inst.n}")
    res = optimal_lw(inst, args.resolution)
    print(json.dumps(res.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liquidwelfare", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one mechanism on an instance file")
    r.add_argument("mechanism", help=", ".join(REGISTRY))
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=0, help="seed for randomized mechanisms")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="run the property checks")
    a.add_argument("mechanism")
    a.add_argument("file", nargs="?")
    a.add_argument("--random", nargs=2, type=int, metavar=("N", "COUNT"))
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--generator", choices=["additive", "concave", "subadditive"])
    a.add_argument("-v", "--verbose", action="store_true", help="print passing reports too")
    a.set_defaults(func=cmd_audit)

    e = sub.add_parser("experiment", help="seeded batch to CSV")
    e.add_argument("config")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="optimal liquid welfare of an instance")
    o.add_argument("file")
    o.add_argument("--resolution", type=int, default=1000)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("LIQUID_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (LiquidWelfareError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
