"""Microbenchmarks for the sharing operations plus simulated end-to-end PUT
throughput, with CSV output and trend assertions.

Each (scheme, op) pair runs a closed loop per n. The n values are measured
in interleaved time slices so that slow drift of the host clock rate hits
every n alike; warmup and cooldown are cut from each n's own timeline.
"""
from __future__ import annotations

import argparse
import csv
import math
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Callable, Iterable, Sequence, TextIO

from .algebra import Polynomial
from .savss import (
    savss_init,
    savss_reconstruct,
    savss_recover,
    savss_recover_contrib,
    savss_recover_verify,
    savss_share,
    savss_verify,
    share_bytes,
)

SCHEMES = ("ped", "kzg")
BASELINE = "plain"  # e2e only: values travel in the clear
MICRO_OPS = ("share", "verify", "reconstruct", "recover_contrib", "recover_verify", "recover")
OPS = MICRO_OPS + ("e2e_put",)
CSV_HEADER = ("scheme", "op", "n", "k", "throughput_ops_s", "latency_mean_ms", "latency_std_ms", "share_bytes")
TICK_SECONDS = 1e-5  # simulator tick

FLAT_RATIO = 2.0
CONTRIB_RATIO = (1.5, 3.0)
E2E_RATIO = (0.40, 0.90)


@dataclass(frozen=True)
class BenchConfig:
    scheme: str
    op: str
    ns: tuple[int, ...] = (4, 10, 16)
    duration: float = 20.0
    warmup: float = 2.0
    cooldown: float = 2.0
    seed: int = 0
    min_samples: int = 30
    slice_seconds: float = 0.25
    e2e_clients: int = 8
    e2e_puts: int = 40  # per client

    def validate(self) -> None:
        if self.scheme not in SCHEMES + (BASELINE,):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.op not in OPS:
            raise ValueError(f"unknown op {self.op!r}")
        if self.scheme == BASELINE and self.op != "e2e_put":
            raise ValueError("the plain baseline only exists for e2e_put")
        if not self.ns:
            raise ValueError("need at least one n")
        for n in self.ns:
            if n < 4 or (n - 1) % 3:
                raise ValueError(f"n must be 3f+1 with f >= 1, got {n}")
        if self.duration <= self.warmup + self.cooldown:
            raise ValueError("duration must exceed warmup + cooldown")
        if self.warmup < 0 or self.cooldown < 0:
            raise ValueError("warmup and cooldown must be non-negative")


@dataclass(frozen=True)
class BenchResult:
    scheme: str
    op: str
    n: int
    k: int
    throughput_ops_s: float
    latency_mean_ms: float
    latency_std_ms: float
    share_bytes: int
    samples: int = 0
    flagged: bool = False  # fewer samples than asked for

    def row(self) -> list[str]:
        return [
            self.scheme,
            self.op,
            str(self.n),
            str(self.k),
            f"{self.throughput_ops_s:.3f}",
            f"{self.latency_mean_ms:.4f}",
            f"{self.latency_std_ms:.4f}",
            str(self.share_bytes),
        ]


def threshold_for(n: int) -> int:
    return (n - 1) // 3 + 1


# ------------------------------------------------------------------ micro ops


def _fixture(scheme: str, n: int, op: str, seed: int) -> tuple[Callable[[], object], int]:
    """Closure running one instance of ``op`` plus the per-replica share size."""
    k = threshold_for(n)
    rng = Random(f"bench/{seed}/{scheme}/{n}")
    params, sks = savss_init(k, n, scheme, rng, dealer_id="bench")
    poly = Polynomial.random(k - 1, rng)
    cvec, shares = savss_share(poly, params, sks, rng)
    target = n
    contribs = {i: savss_recover_contrib(params, cvec, sks[i - 1], shares[i - 1], target, rng) for i in range(1, k + 1)}
    first_k = {i: shares[i - 1] for i in range(1, k + 1)}
    runners: dict[str, Callable[[], object]] = {
        "share": lambda: savss_share(poly, params, sks, rng),
        "verify": lambda: savss_verify(params, cvec, shares[0]),
        "reconstruct": lambda: savss_reconstruct(params, cvec, first_k),
        "recover_contrib": lambda: savss_recover_contrib(params, cvec, sks[0], shares[0], target, rng),
        "recover_verify": lambda: savss_recover_verify(params, cvec, contribs[1], target),
        "recover": lambda: savss_recover(params, cvec, contribs, target),
    }
    return runners[op], share_bytes(cvec, shares[0])


def _summarise(cfg: BenchConfig, n: int, kept: list[float], window: float, size: int) -> BenchResult:
    mean = statistics.fmean(kept) if kept else math.nan
    std = statistics.stdev(kept) if len(kept) > 1 else 0.0
    return BenchResult(
        cfg.scheme,
        cfg.op,
        n,
        threshold_for(n),
        len(kept) / window if window > 0 else 0.0,
        mean * 1e3,
        std * 1e3,
        size,
        len(kept),
        len(kept) < cfg.min_samples,
    )


def _run_micro(cfg: BenchConfig) -> list[BenchResult]:
    fixtures = {n: _fixture(cfg.scheme, n, cfg.op, cfg.seed) for n in cfg.ns}
    clock = {n: 0.0 for n in cfg.ns}  # time spent on each n so far
    kept: dict[int, list[float]] = {n: [] for n in cfg.ns}
    keep_until = cfg.duration - cfg.cooldown
    while any(c < cfg.duration for c in clock.values()):
        for n in cfg.ns:
            run = fixtures[n][0]
            stop = min(clock[n] + cfg.slice_seconds, cfg.duration)
            while clock[n] < stop:
                began = time.perf_counter()
                run()
                took = time.perf_counter() - began
                start = clock[n]
                clock[n] += took
                if start >= cfg.warmup and clock[n] <= keep_until:
                    kept[n].append(took)
    window = cfg.duration - cfg.warmup - cfg.cooldown
    return [_summarise(cfg, n, kept[n], window, fixtures[n][1]) for n in cfg.ns]


# ------------------------------------------------------------------ end to end


def e2e_scenario(n: int, sharing: bool, scheme: str, seed: int, clients: int, puts: int):
    from .simnet.scenario import OpSpec, Scenario

    ops = tuple(
        OpSpec(0, f"c{c}", "put", f"c{c}/k{i % 2}", i + 1) for c in range(1, clients + 1) for i in range(puts)
    )
    return Scenario(
        f"e2e-{scheme if sharing else BASELINE}-n{n}",
        seed=seed,
        f=(n - 1) // 3,
        scheme=scheme,
        sharing=sharing,
        ops=ops,
    )


def _run_e2e(cfg: BenchConfig) -> list[BenchResult]:
    """Saturating closed-loop PUTs in the simulator; warmup and cooldown are
    the same fractions of the simulated span as of the wall-clock run."""
    from .simnet.engine import Simulation

    sharing = cfg.scheme != BASELINE
    scheme = cfg.scheme if sharing else "ped"
    lead, tail = cfg.warmup / cfg.duration, cfg.cooldown / cfg.duration
    out = []
    for n in cfg.ns:
        sc = e2e_scenario(n, sharing, scheme, cfg.seed, cfg.e2e_clients, cfg.e2e_puts)
        trace = Simulation(sc, record_messages=False).run(settle=0)
        done = [(t, d["latency"]) for t, kind, _, d in trace.events if kind == "complete" and d["status"] == "ok"]
        span = max((t for t, _ in done), default=0)
        lo, hi = span * lead, span * (1 - tail)
        kept = [lat * TICK_SECONDS for t, lat in done if t - lat >= lo and t <= hi]
        window = (hi - lo) * TICK_SECONDS
        size = 0
        if sharing:
            size = _fixture(scheme, n, "verify", cfg.seed)[1]
        out.append(_summarise(cfg, n, kept, window, size))
    return out


def run_bench(cfg: BenchConfig) -> list[BenchResult]:
    """One result per n; results short of ``min_samples`` come back flagged."""
    cfg.validate()
    if cfg.op == "e2e_put":
        return _run_e2e(cfg)
    return _run_micro(cfg)


# ------------------------------------------------------------------ csv


def emit_csv(results: Iterable[BenchResult], out: str | Path | TextIO) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            emit_csv(results, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow(r.row())


def parse_csv(src: str | Path | TextIO) -> list[BenchResult]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return parse_csv(fh)
    reader = csv.DictReader(src)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [
        BenchResult(
            row["scheme"],
            row["op"],
            int(row["n"]),
            int(row["k"]),
            float(row["throughput_ops_s"]),
            float(row["latency_mean_ms"]),
            float(row["latency_std_ms"]),
            int(row["share_bytes"]),
        )
        for row in reader
    ]


def non_timing(r: BenchResult) -> tuple:
    return (r.scheme, r.op, r.n, r.k, r.share_bytes)


# ------------------------------------------------------------------ trends


@dataclass(frozen=True)
class TrendCheck:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class TrendVerdict:
    checks: tuple[TrendCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]

    def __bool__(self) -> bool:
        return self.ok


def _series(results: Sequence[BenchResult], scheme: str, op: str) -> list[tuple[int, BenchResult]]:
    by_n = {r.n: r for r in results if r.scheme == scheme and r.op == op}
    return sorted(by_n.items())


def loglog_slope(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares exponent b of cost ~ a * n**b."""
    xs = [math.log(x) for x, _ in points]
    ys = [math.log(y) for _, y in points]
    mx, my = statistics.fmean(xs), statistics.fmean(ys)
    den = sum((x - mx) ** 2 for x in xs)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / den


def _spread(series: list[tuple[int, BenchResult]]) -> float:
    lats = [r.latency_mean_ms for _, r in series]
    return max(lats) / min(lats)


def assert_trends(results: Sequence[BenchResult]) -> TrendVerdict:
    """Scaling checks over whatever (scheme, op) series span at least three n.

    Raises ValueError when no series is wide enough to judge.
    """
    checks: list[TrendCheck] = []
    for scheme in SCHEMES:
        share = _series(results, scheme, "share")
        if len(share) >= 3:
            slope = loglog_slope([(n, r.latency_mean_ms) for n, r in share])
            checks.append(TrendCheck(f"share-superlinear[{scheme}]", slope > 1.0, f"log-log slope {slope:.2f}"))
        contrib = _series(results, scheme, "recover_contrib")
        if len(contrib) >= 3:
            spread = _spread(contrib)
            checks.append(
                TrendCheck(f"recover_contrib-flat[{scheme}]", spread <= FLAT_RATIO, f"max/min {spread:.2f}")
            )
        verify = _series(results, scheme, "verify")
        if len(verify) >= 3:
            if scheme == "kzg":
                spread = _spread(verify)
                checks.append(TrendCheck("verify-flat[kzg]", spread <= FLAT_RATIO, f"max/min {spread:.2f}"))
            else:
                lats = [r.latency_mean_ms for _, r in verify]
                rising = all(a < b for a, b in zip(lats, lats[1:]))
                shown = ", ".join(f"{x:.3f}" for x in lats)
                checks.append(TrendCheck("verify-increasing[ped]", rising, f"latency ms {shown}"))
        sized = [(n, r.share_bytes) for n, r in _series_any_op(results, scheme) if r.share_bytes > 0]
        if len(sized) >= 3:
            sizes = [b for _, b in sized]
            if scheme == "kzg":
                checks.append(TrendCheck("share-bytes-constant[kzg]", len(set(sizes)) == 1, f"bytes {sizes}"))
            else:
                rising = all(a < b for a, b in zip(sizes, sizes[1:]))
                checks.append(TrendCheck("share-bytes-increasing[ped]", rising, f"bytes {sizes}"))
    ped = dict(_series(results, "ped", "recover_contrib"))
    kzg = dict(_series(results, "kzg", "recover_contrib"))
    if 10 in ped and 10 in kzg:
        ratio = ped[10].latency_mean_ms / kzg[10].latency_mean_ms
        lo, hi = CONTRIB_RATIO
        checks.append(TrendCheck("recover_contrib-ratio[ped:kzg,n=10]", lo <= ratio <= hi, f"ratio {ratio:.2f}"))
    base = dict(_series(results, BASELINE, "e2e_put"))
    for scheme in SCHEMES:
        shared = dict(_series(results, scheme, "e2e_put"))
        if 4 in shared and 4 in base:
            ratio = shared[4].throughput_ops_s / base[4].throughput_ops_s
            lo, hi = E2E_RATIO
            checks.append(TrendCheck(f"e2e-overhead[{scheme},n=4]", lo <= ratio <= hi, f"sharing/plain {ratio:.2f}"))
    if not checks:
        raise ValueError("trend checks need results spanning at least three values of n")
    return TrendVerdict(tuple(checks))


def _series_any_op(results: Sequence[BenchResult], scheme: str) -> list[tuple[int, BenchResult]]:
    """Share sizes do not depend on the op; take one row per n."""
    by_n: dict[int, BenchResult] = {}
    for r in results:
        if r.scheme == scheme and r.op in MICRO_OPS:
            by_n.setdefault(r.n, r)
    return sorted(by_n.items())


# ------------------------------------------------------------------ cli


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="avss-bench", description=__doc__.splitlines()[0])
    p.add_argument("--scheme", action="append", choices=SCHEMES, help="repeatable; default both")
    p.add_argument("--op", action="append", choices=OPS, help="repeatable; default all")
    p.add_argument("--n", action="append", type=int, dest="ns", help="repeatable; default 4, 10, 16")
    p.add_argument("--duration", type=float, default=20.0, help="seconds per (scheme, op, n)")
    p.add_argument("--warmup", type=float, default=2.0)
    p.add_argument("--cooldown", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path; stdout when omitted")
    p.add_argument("--assert-trends", action="store_true", help="exit non-zero unless every trend holds")
    return p


def configs_for(
    schemes: Sequence[str], ops: Sequence[str], ns: Sequence[int], **common: object
) -> list[BenchConfig]:
    cfgs = [BenchConfig(s, op, tuple(ns), **common) for op in ops for s in schemes]
    if "e2e_put" in ops:
        cfgs.append(BenchConfig(BASELINE, "e2e_put", tuple(ns), **common))
    return cfgs


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    ns = args.ns or [4, 10, 16]
    common = dict(duration=args.duration, warmup=args.warmup, cooldown=args.cooldown, seed=args.seed)
    try:
        cfgs = configs_for(args.scheme or list(SCHEMES), args.op or list(OPS), ns, **common)
        for cfg in cfgs:
            cfg.validate()
    except ValueError as exc:
        print(f"avss-bench: {exc}", file=sys.stderr)
        return 2
    results: list[BenchResult] = []
    for cfg in cfgs:
        batch = run_bench(cfg)
        for r in batch:
            mark = "  (flagged: too few samples)" if r.flagged else ""
            print(
                f"{r.scheme:5} {r.op:15} n={r.n:<3} {r.latency_mean_ms:9.3f} ms  {r.throughput_ops_s:10.1f} ops/s{mark}",
                file=sys.stderr,
            )
        results.extend(batch)
    try:
        emit_csv(results, args.out if args.out else sys.stdout)
    except OSError as exc:
        print(f"avss-bench: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    status = 0
    if any(r.flagged for r in results):
        print("avss-bench: some results have fewer samples than required", file=sys.stderr)
        status = 1
    if args.assert_trends:
        try:
            verdict = assert_trends(results)
        except ValueError as exc:
            print(f"avss-bench: {exc}", file=sys.stderr)
            return 1
        for c in verdict.checks:
            print(f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}", file=sys.stderr)
        if not verdict.ok:
            status = 1
    return status


if __name__ == "__main__":
    raise SystemExit(main())
