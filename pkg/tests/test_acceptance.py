"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (the lines appear in the -v output) or directly:

    python tests/test_acceptance.py
"""
from __future__ import annotations

import functools
import itertools
import math
import statistics
import time
from dataclasses import dataclass, replace
from random import Random

import pytest

from avss.algebra import Q, Point, Polynomial
from avss.bench import BASELINE, BenchConfig, run_bench
from avss.dprf import DprfInput, dprf_contrib, dprf_eval
from avss.savss import (
    DealerFault,
    deal_with_bad_masks,
    savss_expose_dealer,
    savss_init,
    savss_reconstruct,
    savss_recover,
    savss_recover_contrib,
    savss_recover_verify,
    savss_share,
    savss_verify,
    share_bytes,
    verify_fault_evidence,
)
from avss.simnet import run_scenario
from avss.simnet.checkers import check_linearizability, check_liveness, check_privacy, check_safety
from avss.simnet.corpus import corpus
from avss.vss import PedersenShare

# pinned tolerances
RUNTIME_ROUNDTRIP_S = 60
RUNTIME_RECOVERY_S = 120
RUNTIME_CORPUS_S = 300
RANDOM_SUBSETS = 50
RANDOM_TARGETS = 20
MUTATIONS = 1000
HONEST_TRIALS = 1000
LINEAR_FIT_TOLERANCE = 0.20
CONTRIB_RATIO = (1.5, 3.0)
FLAT_RATIO = 2.0
E2E_RATIO = (0.40, 0.90)
MIN_CORPUS = 12

SCHEMES = ("ped", "kzg")


@dataclass
class Outcome:
    number: int
    title: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} criterion {self.number:>2} {self.title}: {self.detail}"


def _report(outcome: Outcome, capsys=None) -> None:
    if capsys is not None:
        with capsys.disabled():
            print("\n" + outcome.line())
    else:
        print(outcome.line())


def _deal(scheme, f, seed):
    rng = Random(f"acceptance/{scheme}/{f}/{seed}")
    params, sks = savss_init(f + 1, 3 * f + 1, scheme, rng)
    s = Polynomial.random(f, rng)
    cvec, shares = savss_share(s, params, sks, rng)
    return params, sks, s, cvec, shares, rng


def _recovery_shares(params, sks, cvec, shares, target, helpers, rng):
    return {i: savss_recover_contrib(params, cvec, sks[i - 1], shares[i - 1], target, rng) for i in helpers}


# ------------------------------------------------------------------ 1


def criterion_1() -> Outcome:
    began = time.perf_counter()
    checked, wrong = 0, []
    for scheme in SCHEMES:
        for f in (1, 2, 3):
            params, _, s, cvec, shares, rng = _deal(scheme, f, 1)
            n, k = params.n, params.k
            if not all(savss_verify(params, cvec, sh) for sh in shares):
                wrong.append(f"{scheme} n={n}: a dealt share failed to verify")
                continue
            if n == 4:
                subsets = list(itertools.combinations(range(1, n + 1), k))
            else:
                subsets = [tuple(sorted(rng.sample(range(1, n + 1), k))) for _ in range(RANDOM_SUBSETS)]
            for sub in subsets:
                checked += 1
                if savss_reconstruct(params, cvec, {i: shares[i - 1] for i in sub}) != s:
                    wrong.append(f"{scheme} n={n} subset {sub}")
    wall = time.perf_counter() - began
    ok = not wrong and wall < RUNTIME_ROUNDTRIP_S
    detail = f"{checked} subsets, {len(wrong)} mismatches, {wall:.1f}s (< {RUNTIME_ROUNDTRIP_S}s)"
    return Outcome(1, "round-trip correctness", ok, detail + (f"; first {wrong[0]}" if wrong else ""))


# ------------------------------------------------------------------ 2


def criterion_2() -> Outcome:
    began = time.perf_counter()
    checked, wrong = 0, []
    for scheme in SCHEMES:
        for f in (1, 2, 3):
            params, sks, _, cvec, shares, rng = _deal(scheme, f, 2)
            n, k = params.n, params.k
            targets = range(1, n + 1) if n == 4 else [rng.randrange(1, n + 1) for _ in range(RANDOM_TARGETS)]
            for target in targets:
                helpers = rng.sample([i for i in range(1, n + 1) if i != target], k)
                got = savss_recover(params, cvec, _recovery_shares(params, sks, cvec, shares, target, helpers, rng), target)
                checked += 1
                if got is None or got.entries[0].value != shares[target - 1].entries[0].value:
                    wrong.append(f"{scheme} n={n} target {target}: wrong value")
                elif not (got.is_recovered and savss_verify(params, cvec, got)):
                    wrong.append(f"{scheme} n={n} target {target}: certificate rejected")
    wall = time.perf_counter() - began
    ok = not wrong and wall < RUNTIME_RECOVERY_S
    detail = f"{checked} recoveries, {len(wrong)} failures, {wall:.1f}s (< {RUNTIME_RECOVERY_S}s)"
    return Outcome(2, "recovery exactness", ok, detail + (f"; first {wrong[0]}" if wrong else ""))


# ------------------------------------------------------------------ 3


def _bump(x: int) -> int:
    return (x + 1 + Random(x).randrange(Q - 1)) % Q


def _mutate(kind, fx, rng):
    """Return (verifier, mutated object) for one random mutation of ``kind``."""
    params, cvec, shares, rss, recovered, target = fx
    g = params.vss.g if hasattr(params.vss, "g") else Point.generator()
    if kind == "share":
        sh = shares[rng.randrange(len(shares))]
        slot = rng.randrange(len(sh.entries))
        e = sh.entries[slot]
        if isinstance(e, PedersenShare) and rng.random() < 0.5:
            e = replace(e, blinding=_bump(e.blinding))
        else:
            e = replace(e, value=_bump(e.value))
        return lambda x: savss_verify(params, cvec, x), replace(sh, entries=sh.entries[:slot] + (e,) + sh.entries[slot + 1 :])
    if kind == "witness":
        sh = shares[rng.randrange(len(shares))]
        slot = rng.randrange(len(sh.entries))
        e = sh.entries[slot]
        if isinstance(e, PedersenShare):
            # Pedersen has no witness; the blinding plays that role
            e = replace(e, blinding=_bump(e.blinding))
        else:
            e = replace(e, witness=e.witness + g * rng.randrange(1, Q))
        return lambda x: savss_verify(params, cvec, x), replace(sh, entries=sh.entries[:slot] + (e,) + sh.entries[slot + 1 :])
    if kind == "contribution":
        rs = rss[rng.choice(sorted(rss))]
        comp = rng.randrange(len(rs.contribs))
        con = rs.contribs[comp]
        field_name = rng.choice(["delta", "c", "z", "blinded"])
        if field_name == "delta":
            con = replace(con, delta=con.delta + g * rng.randrange(1, Q))
        elif field_name in ("c", "z"):
            con = replace(con, **{field_name: _bump(getattr(con, field_name))})
        if field_name == "blinded":
            mutated = replace(rs, blinded=replace(rs.blinded, value=_bump(rs.blinded.value)))
        else:
            mutated = replace(rs, contribs=rs.contribs[:comp] + (con,) + rs.contribs[comp + 1 :])
        return lambda x: savss_recover_verify(params, cvec, x, target), mutated
    cert = recovered.certificate
    choice = rng.randrange(3)
    if choice == 0:
        comp = rng.randrange(len(cert.contribs))
        items = list(cert.contribs[comp])
        j = rng.randrange(len(items))
        i, con = items[j]
        items[j] = (i, replace(con, z=_bump(con.z)))
        cert = replace(cert, contribs=cert.contribs[:comp] + (tuple(items),) + cert.contribs[comp + 1 :])
    elif choice == 1:
        cert = replace(cert, blinded=replace(cert.blinded, value=_bump(cert.blinded.value)))
    else:
        comp = rng.randrange(len(cert.contribs))
        cert = replace(cert, contribs=cert.contribs[:comp] + (cert.contribs[comp][:-1],) + cert.contribs[comp + 1 :])
    return lambda x: savss_verify(params, cvec, x), replace(recovered, certificate=cert)


def _negative_fixture(scheme, seed):
    params, sks, _, cvec, shares, rng = _deal(scheme, 1, seed)
    target = 1 + seed % params.n
    helpers = [i for i in range(1, params.n + 1) if i != target][: params.k]
    rss = _recovery_shares(params, sks, cvec, shares, target, helpers, rng)
    recovered = savss_recover(params, cvec, rss, target)
    return params, sks, cvec, shares, rss, recovered, target


def criterion_3() -> Outcome:
    rng = Random("acceptance/negative")
    problems = []
    fixtures = [_negative_fixture(scheme, seed) for scheme in SCHEMES for seed in range(4)]

    # below threshold
    for params, sks, cvec, shares, rss, _, target in fixtures:
        few = dict(itertools.islice(rss.items(), params.k - 1))
        if savss_recover(params, cvec, few, target) is not None:
            problems.append("k-1 recovery shares produced a share")
        if savss_reconstruct(params, cvec, {i: shares[i - 1] for i in range(1, params.k)}) is not None:
            problems.append("k-1 shares reconstructed")
        x = DprfInput(cvec.nonce, 0, target)
        cons = {sk.index: dprf_contrib(sk, x, params.dprf_pk, rng) for sk in sks[: params.k - 1]}
        if dprf_eval(x, cons, params.dprf_pk, params.k) is not None:
            problems.append("k-1 DPRF contributions evaluated")

    kinds = ("share", "witness", "contribution", "certificate")
    accepted = 0
    for t in range(MUTATIONS):
        params, _, cvec, shares, rss, recovered, target = fixtures[t % len(fixtures)]
        verifier, obj = _mutate(kinds[t % len(kinds)], (params, cvec, shares, rss, recovered, target), rng)
        if verifier(obj):
            accepted += 1
            problems.append(f"mutation {kinds[t % len(kinds)]} accepted")

    false_rejects = 0
    for t in range(HONEST_TRIALS):
        params, _, cvec, shares, rss, recovered, target = fixtures[t % len(fixtures)]
        which = t % 3
        if which == 0:
            good = savss_verify(params, cvec, shares[rng.randrange(params.n)])
        elif which == 1:
            good = savss_recover_verify(params, cvec, rss[rng.choice(sorted(rss))], target)
        else:
            good = savss_verify(params, cvec, recovered)
        false_rejects += not good
    ok = not problems and false_rejects == 0
    detail = f"{accepted}/{MUTATIONS} mutations accepted, {false_rejects}/{HONEST_TRIALS} honest rejected"
    below = [p for p in problems if p.startswith("k-1")]
    detail += f", below-threshold {'ok' if not below else below[0]}"
    return Outcome(3, "threshold and negative suite", ok, detail)


# ------------------------------------------------------------------ 4


def criterion_4() -> Outcome:
    seen = {}
    for f in range(1, 11):
        params, _ = savss_init(f + 1, 3 * f + 1, "ped", Random(f))
        seen[params.n] = params.ell
    ok = set(seen.values()) == {4}
    return Outcome(4, "four recovery polynomials", ok, f"ell by n {seen}")


# ------------------------------------------------------------------ 5


def _linear_fit_error(points):
    xs, ys = [x for x, _ in points], [y for _, y in points]
    mx, my = statistics.fmean(xs), statistics.fmean(ys)
    slope = sum((x - mx) * (y - my) for x, y in points) / sum((x - mx) ** 2 for x in xs)
    icept = my - slope * mx
    return max(abs(y - (icept + slope * x)) / (icept + slope * x) for x, y in points)


def criterion_5() -> Outcome:
    sizes = {}
    for scheme in SCHEMES:
        for n in (4, 16, 31):
            f = (n - 1) // 3
            params, _, _, cvec, shares, _ = _deal(scheme, f, 5)
            sizes[scheme, n] = share_bytes(cvec, shares[0])
    kzg = [sizes["kzg", n] for n in (4, 16, 31)]
    ped = [sizes["ped", n] for n in (4, 16, 31)]
    fit = _linear_fit_error(list(zip((4, 16, 31), ped)))
    ok = len(set(kzg)) == 1 and all(a < b for a, b in zip(ped, ped[1:])) and fit <= LINEAR_FIT_TOLERANCE
    detail = f"kzg bytes {kzg}, ped bytes {ped}, ped max deviation from linear fit {fit:.1%} (<= 20%)"
    return Outcome(5, "share size scaling", ok, detail)


# ------------------------------------------------------------------ 6


def criterion_6(duration: float = 4.0) -> Outcome:
    lat = {}
    for scheme in SCHEMES:
        cfg = BenchConfig(scheme, "recover_contrib", (4, 10, 16), duration=duration, warmup=0.5, cooldown=0.5)
        for r in run_bench(cfg):
            lat[scheme, r.n] = r.latency_mean_ms
    ratio = lat["ped", 10] / lat["kzg", 10]
    spreads = {s: max(lat[s, n] for n in (4, 10, 16)) / min(lat[s, n] for n in (4, 10, 16)) for s in SCHEMES}
    lo, hi = CONTRIB_RATIO
    ok = lo <= ratio <= hi and all(v <= FLAT_RATIO for v in spreads.values())
    shown = ", ".join(f"{s}:{n}={lat[s, n]:.2f}ms" for s in SCHEMES for n in (4, 10, 16))
    detail = (
        f"ped/kzg at n=10 {ratio:.2f} (in [{lo}, {hi}]), max/min ped {spreads['ped']:.2f} "
        f"kzg {spreads['kzg']:.2f} (<= {FLAT_RATIO}); {shown}"
    )
    return Outcome(6, "recovery contribution cost", ok, detail)


# ------------------------------------------------------------------ 7 and 8


@functools.lru_cache(maxsize=1)
def _corpus_traces():
    began = time.perf_counter()
    traces = [(sc, run_scenario(sc)) for sc in corpus()]
    return traces, time.perf_counter() - began


def _committed_values_survive(trace) -> bool:
    """Every acknowledged PUT is still readable at the end by the replicas that
    executed past it: their final stores agree (safety) and their executed
    sequences include the PUT's slot."""
    heights = [v["last_executed"] for v in trace.final.values() if not v["crashed"] and not v["faulty"]]
    executed = {d["seq"] for _, kind, _, d in trace.events if kind == "execute"}
    return bool(heights) and min(heights) >= max(executed, default=0)


def criterion_7() -> Outcome:
    traces, wall = _corpus_traces()
    ns = {sc.n for sc, _ in traces}
    failures = []
    view_changes = 0
    for sc, trace in traces:
        for name, v in (
            ("liveness", check_liveness(trace)),
            ("linearizable", check_linearizability(trace)),
            ("safety", check_safety(trace)),
        ):
            if not v.ok:
                failures.append(f"{sc.name}:{name}")
        if not _committed_values_survive(trace):
            failures.append(f"{sc.name}:lost-commit")
        view_changes = max(view_changes, max(v["view"] for v in trace.final.values()))
    ok = len(traces) >= MIN_CORPUS and ns >= {4, 7} and not failures and wall < RUNTIME_CORPUS_S
    detail = (
        f"{len(traces)} scenarios (>= {MIN_CORPUS}), n in {sorted(ns)}, highest view {view_changes}, "
        f"{len(failures)} failures, {wall:.1f}s (< {RUNTIME_CORPUS_S}s)"
    )
    return Outcome(7, "simulator safety and liveness", ok, detail + (f"; {failures[:3]}" if failures else ""))


def _leak_trace():
    traces, _ = _corpus_traces()
    sc, trace = next((sc, t) for sc, t in traces if sc.name == "honest-n4")
    from copy import copy

    from avss.kvstore.messages import PutShare

    leaked = copy(trace)
    leaked.deliveries = list(trace.deliveries)
    to_r2 = next(d for d in trace.deliveries if d[2] == "r2" and isinstance(d[3].body, PutShare))
    leaked.deliveries.append((to_r2[0], to_r2[1], "r1", to_r2[3]))
    return leaked


def criterion_8() -> Outcome:
    traces, _ = _corpus_traces()
    runs, failures = 0, []
    for sc, trace in traces:
        for corrupt in itertools.combinations(range(1, sc.n + 1), sc.f):
            runs += 1
            if not check_privacy(trace, set(corrupt)).ok:
                failures.append(f"{sc.name}{list(corrupt)}")
    recovery_heavy = sum(1 for _, t in traces for e in t.events if e[1] == "recovered")
    sanity = not check_privacy(_leak_trace(), {1}).ok
    ok = not failures and sanity and recovery_heavy > 0
    detail = (
        f"{runs} (scenario, corrupt set) pairs, {len(failures)} leaks, {recovery_heavy} recoveries observed, "
        f"hand-built leak {'caught' if sanity else 'missed'}"
    )
    return Outcome(8, "privacy", ok, detail + (f"; {failures[:3]}" if failures else ""))


# ------------------------------------------------------------------ 9


def criterion_9() -> Outcome:
    problems = []
    direct = 0
    for scheme in SCHEMES:
        for f in (1, 2):
            n, k = 3 * f + 1, f + 1
            rng = Random(f"acceptance/dealer/{scheme}/{f}")
            params, sks = savss_init(k, n, scheme, rng)
            s = Polynomial.random(k - 1, rng)
            victims = list(range(1, f + 1))
            cvec, shares = deal_with_bad_masks(s, params, sks, {i: 1 + i for i in victims}, rng)
            for target in victims:
                helpers_all = [i for i in range(1, n + 1) if i not in victims]
                for helpers in itertools.islice(itertools.combinations(helpers_all, k), 5):
                    direct += 1
                    try:
                        savss_recover(params, cvec, _recovery_shares(params, sks, cvec, shares, target, helpers, rng), target)
                        problems.append(f"{scheme} n={n} target {target}: no DealerFault")
                        continue
                    except DealerFault as fault:
                        ev = fault.evidence
                    if not verify_fault_evidence(params, ev):
                        problems.append("evidence rejected")
                    revealed = {i: shares[i - 1].entries[0] for i in helpers}
                    if savss_expose_dealer(params, ev, revealed) != s:
                        problems.append(f"{scheme} n={n}: exposed polynomial differs")

    sim_victims, sim_faults = 0, 0
    for sc, trace in _corpus_traces()[0]:
        bad = [x for x in sc.faults if x.kind == "byzantine-dealer"]
        if not bad:
            continue
        dealer = bad[0].target
        put_sids = {
            d["sharing"] for _, kind, _, d in trace.events if kind == "invoke" and d["client"] == dealer and d.get("sharing")
        }
        for victim in bad[0].victims:
            node = f"r{victim}"
            faulted = {d["sharing"] for _, kind, nm, d in trace.events if kind == "dealer_fault" and nm == node}
            starts = {d["sharing"] for _, kind, nm, d in trace.events if kind == "recover_start" and nm == node}
            for sid in put_sids & starts:
                sim_victims += 1
                sim_faults += sid in faulted
        exposed = [d for _, kind, _, d in trace.events if kind == "exposed"]
        committed = {
            d["sharing"]: d["value"] for _, kind, _, d in trace.events if kind == "invoke" and d.get("sharing")
        }
        for d in exposed:
            if committed.get(d["sharing"]) != d["value"]:
                problems.append(f"{sc.name}: exposed value differs")
    if sim_faults != sim_victims or sim_victims == 0:
        problems.append(f"simulator: {sim_faults}/{sim_victims} recovering victims raised DealerFault")
    ok = not problems
    detail = (
        f"{direct} direct recoveries all faulted and exposed exactly; in simulation {sim_faults}/{sim_victims} "
        f"recovering honest replicas raised DealerFault"
    )
    return Outcome(9, "dealer-fault path", ok, detail + (f"; {problems[:3]}" if problems else ""))


# ------------------------------------------------------------------ 10


def criterion_10() -> Outcome:
    common = dict(ns=(4,), duration=10.0, warmup=1.0, cooldown=1.0)
    shared = run_bench(BenchConfig("ped", "e2e_put", **common))[0]
    plain = run_bench(BenchConfig(BASELINE, "e2e_put", **common))[0]
    ratio = shared.throughput_ops_s / plain.throughput_ops_s
    lo, hi = E2E_RATIO
    ok = lo <= ratio <= hi and not math.isnan(ratio)
    detail = (
        f"sharing {shared.throughput_ops_s:.0f} ops/s vs plain {plain.throughput_ops_s:.0f} ops/s "
        f"(simulated), ratio {ratio:.2f} in [{lo}, {hi}]"
    )
    return Outcome(10, "end-to-end overhead trend", ok, detail)


CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, len(CRITERIA) + 1)])
def test_criterion(criterion, capsys):
    outcome = criterion()
    _report(outcome, capsys)
    assert outcome.ok, outcome.line()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for r in results:
        _report(r)
    passed = sum(r.ok for r in results)
    print(f"{passed}/{len(results)} criteria pass")
    raise SystemExit(0 if passed == len(results) else 1)
