"""Command-line interface.

    pointdiff run <config-or-name> [--seed N] [--realisations M] [--threads T] [--out DIR]
    pointdiff selftest {psf,riesz,identities,all}
    pointdiff list-scenarios

`run` accepts either a path to a JSON config or the name of a built-in
scenario; it writes report.json, spectrum.csv and autocorr.csv into the
output directory.  Exit codes: 0 all tolerance checks passed, 2 a tolerance
check failed, 1 config or usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import scenarios
from .runner import ConfigError, run_scenario_to_dir
from .selftests import SUITES, run_suite


def _load_config(spec: str) -> dict:
    if os.path.exists(spec):
        with open(spec) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        return scenarios.get(spec)
    except KeyError:
        raise ConfigError(
            f"{spec!r} is neither a config file nor a built-in scenario "
            f"(see `pointdiff list-scenarios`)"
        ) from None


def _cmd_run(args) -> int:
    try:
        config = _load_config(args.config)
        name = config.get("name", os.path.splitext(os.path.basename(args.config))[0])
        out_dir = args.out or os.path.join("out", name)
        result = run_scenario_to_dir(config, args.seed, args.realisations, args.threads, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"scenario {result.name}: seed={result.seed} realisations={result.realisations} "
          f"threads={result.threads} runtime={result.extras.get('runtime_s', 0.0):.1f}s")
    print(result.report)
    for child in result.children:
        print(f"-- {child.name}: runtime={child.extras.get('runtime_s', 0.0):.1f}s")
    print(f"artifacts written to {out_dir}")
    if not result.report.passed:
        print("tolerance check failed", file=sys.stderr)
        return 2
    return 0


def _cmd_selftest(args) -> int:
    suites = sorted(SUITES) if args.suite == "all" else [args.suite]
    failed = False
    for suite in suites:
        ok, checks = run_suite(suite)
        for label, value, passed in checks:
            print(f"[{'PASS' if passed else 'FAIL'}] {suite}: {label} ({value:.3g})")
        failed |= not ok
    return 2 if failed else 0


def _cmd_list(_args) -> int:
    for name in scenarios.names():
        print(f"{name:28s} {scenarios.get(name).get('description', '')}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pointdiff", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write its artifacts")
    p_run.add_argument("config", help="path to a JSON config, or a built-in scenario name")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--realisations", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_self = sub.add_parser("selftest", help="run a deterministic identity suite")
    p_self.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p_self.set_defaults(func=_cmd_selftest)

    p_list = sub.add_parser("list-scenarios", help="list built-in scenarios")
    p_list.set_defaults(func=_cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
