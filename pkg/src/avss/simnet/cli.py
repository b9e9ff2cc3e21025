"""Command line for running scenarios and checking their traces.

    avss-sim run FILE [--seed S] [--trace OUT]     run one scenario file
    avss-sim corpus [--only NAME ...]               run the built-in corpus
    avss-sim dump DIR                               write the corpus as files
"""
from __future__ import annotations

import argparse
import itertools
import sys
import time
from pathlib import Path
from typing import Sequence

from .checkers import Verdict, check_linearizability, check_liveness, check_privacy, check_safety, check_window
from .corpus import corpus
from .engine import Trace, run_scenario
from .scenario import Scenario, dump_scenario, parse_scenario, with_seed


def verdicts(trace: Trace, privacy: bool = True) -> dict[str, Verdict]:
    """Every checker on one trace; privacy is tried against each f-subset of
    replicas and reports the first failing one."""
    out = {
        "linearizable": check_linearizability(trace),
        "safety": check_safety(trace),
        "liveness": check_liveness(trace),
        "window": check_window(trace),
    }
    if privacy:
        result = Verdict(True)
        for corrupt in itertools.combinations(range(1, trace.n + 1), trace.f):
            result = check_privacy(trace, set(corrupt))
            if not result.ok:
                result = Verdict(False, f"{result.message} (corrupt {sorted(corrupt)})", result.witness)
                break
        out["privacy"] = result
    return out


def _report(sc: Scenario, trace: Trace, results: dict[str, Verdict], wall: float) -> bool:
    ok = all(v.ok for v in results.values())
    views = max(v["view"] for v in trace.final.values())
    print(f"{'PASS' if ok else 'FAIL'} {sc.name} (seed {sc.seed}, n={trace.n}) end={trace.end_time} view={views} {wall:.1f}s")
    for name, v in results.items():
        if not v.ok:
            print(f"    {name}: {v.message}")
            for w in v.witness[:10]:
                print(f"        {w}")
    return ok


def _run_one(sc: Scenario, trace_out: str | None, privacy: bool) -> bool:
    began = time.perf_counter()
    trace = run_scenario(sc)
    results = verdicts(trace, privacy)
    if trace_out:
        Path(trace_out).write_text(trace.export())
    return _report(sc, trace, results, time.perf_counter() - began)


def main(argv: Sequence[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="avss-sim", description="Simulate the private key-value store.")
    sub = p.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("file")
    run.add_argument("--seed", type=int, help="override the file's seed")
    run.add_argument("--trace", help="write the event log here")
    run.add_argument("--no-privacy", action="store_true", help="skip the privacy checker")
    cor = sub.add_parser("corpus", help="run the reference corpus")
    cor.add_argument("--only", action="append", help="scenario name, repeatable")
    cor.add_argument("--no-privacy", action="store_true")
    dump = sub.add_parser("dump", help="write the corpus as scenario files")
    dump.add_argument("dir")
    args = p.parse_args(argv)

    if args.cmd == "dump":
        out = Path(args.dir)
        out.mkdir(parents=True, exist_ok=True)
        for sc in corpus():
            (out / f"{sc.name}.ini").write_text(dump_scenario(sc))
        print(f"wrote {len(corpus())} scenarios to {out}")
        return 0
    if args.cmd == "run":
        try:
            sc = parse_scenario(Path(args.file).read_text())
        except (OSError, ValueError) as exc:
            print(f"avss-sim: {exc}", file=sys.stderr)
            return 2
        if args.seed is not None:
            sc = with_seed(sc, args.seed)
        return 0 if _run_one(sc, args.trace, not args.no_privacy) else 1
    chosen = corpus()
    if args.only:
        known = {sc.name for sc in chosen}
        unknown = sorted(set(args.only) - known)
        if unknown:
            print(f"avss-sim: unknown scenario {', '.join(unknown)}", file=sys.stderr)
            return 2
        chosen = [sc for sc in chosen if sc.name in args.only]
    failed = [sc.name for sc in chosen if not _run_one(sc, None, not args.no_privacy)]
    print(f"{len(chosen) - len(failed)}/{len(chosen)} scenarios pass")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
