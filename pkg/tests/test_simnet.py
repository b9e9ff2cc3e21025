"""Simulator determinism, scenario files, checkers and the avss-sim command."""
import pytest

from avss.kvstore.messages import PutShare
from avss.simnet import Fault, OpSpec, Scenario, Trace, Workload, dump_scenario, parse_scenario, run_scenario
from avss.simnet.checkers import (
    check_linearizability,
    check_liveness,
    check_privacy,
    check_safety,
    check_window,
)
from avss.simnet.cli import main as sim_main
from avss.simnet.cli import verdicts
from avss.simnet.corpus import by_name, corpus
from avss.simnet.scenario import with_seed

SHORT = Scenario("short", seed=5, f=1, workload=Workload(("c1", "c2"), 2, 6, 0, 20), window=16, checkpoint_period=8)


def register_trace(ops):
    """Trace holding only client events: (invoke_t, complete_t, client, rseq, op, value)."""
    trace = Trace("hand", 0, 4, 1, 16)
    for t0, t1, client, rseq, op, value in ops:
        detail = {"client": client, "rseq": rseq, "op": op, "key": "k"}
        if op == "put":
            detail["value"] = value
        trace.record(t0, "invoke", client, detail)
        trace.record(t1, "complete", client, {**detail, "status": "ok", "value": value})
    trace.events.sort(key=lambda e: e[0])
    return trace


def test_same_seed_same_trace():
    a, b = run_scenario(SHORT), run_scenario(SHORT)
    assert a.export() == b.export()
    assert a.export() != run_scenario(with_seed(SHORT, 6)).export()


def test_honest_run_passes_every_checker():
    trace = run_scenario(SHORT)
    assert all(v.ok for v in verdicts(trace).values())


def test_stale_read_caught():
    trace = register_trace(
        [
            (0, 10, "c1", 1, "put", 1),
            (20, 30, "c1", 2, "put", 2),
            (40, 50, "c2", 1, "get", 1),
        ]
    )
    v = check_linearizability(trace)
    assert not v.ok and "'k'" in v.message
    assert [o.value for o in v.witness] == [1, 2, 1]


def test_concurrent_read_may_see_either_value():
    for seen in (1, 2):
        trace = register_trace([(0, 10, "c1", 1, "put", 1), (20, 60, "c1", 2, "put", 2), (30, 40, "c2", 1, "get", seen)])
        assert check_linearizability(trace).ok


def test_read_of_unwritten_value_caught():
    assert not check_linearizability(register_trace([(0, 10, "c1", 1, "put", 1), (20, 30, "c2", 1, "get", 9)])).ok


def test_leaked_share_caught():
    trace = run_scenario(SHORT)
    assert check_privacy(trace, {1}).ok
    to_r2 = next(d for d in trace.deliveries if d[2] == "r2" and isinstance(d[3].body, PutShare))
    trace.deliveries.append((to_r2[0], to_r2[1], "r1", to_r2[3]))
    v = check_privacy(trace, {1})
    assert not v.ok and "leak" in v.message
    assert check_privacy(trace, {3}).ok


def test_privacy_rejects_too_many_corrupt():
    with pytest.raises(ValueError):
        check_privacy(run_scenario(SHORT), {1, 2})


def test_divergent_execution_caught():
    trace = run_scenario(SHORT)
    t, _, node, d = next(e for e in trace.events if e[1] == "execute" and e[2] == "r2")
    trace.events.append((t, "execute", "r3", {**d, "digest": "00" * 32}))
    assert not check_safety(trace).ok


def test_unfinished_request_and_window_overflow_caught():
    trace = run_scenario(SHORT)
    trace.record(10**9, "invoke", "c1", {"client": "c1", "rseq": 999, "op": "get", "key": "k"})
    assert not check_liveness(trace).ok
    trace.final["r1"]["max_pending"] = trace.window + 1
    assert not check_window(trace).ok


# ------------------------------------------------------------------ scenario format


def test_dump_parse_round_trip():
    for sc in corpus():
        assert parse_scenario(dump_scenario(sc)) == sc


def test_explicit_ops_round_trip():
    sc = Scenario(
        "ops",
        seed=3,
        async_phases=((10, 20, 50),),
        ops=(OpSpec(0, "c1", "put", "c1/a", 5), OpSpec(9, "c1", "acl", "c1/a", readers=("c2", "c3"))),
        faults=(Fault(4, "partition", until=90, groups=(("r1",), ("r2", "r3", "r4"))),),
    )
    assert parse_scenario(dump_scenario(sc)) == sc


def test_too_many_faulty_replicas_rejected():
    with pytest.raises(ValueError):
        Scenario("bad", f=1, faults=(Fault(0, "crash", "r1"), Fault(0, "crash", "r2"))).validate()
    with pytest.raises(ValueError):
        Scenario("bad", f=1, faults=(Fault(0, "byzantine-dealer", "c1", victims=(1, 2)),)).validate()


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_scenario("[other]\nx = 1\n")
    with pytest.raises(ValueError):
        parse_scenario("[scenario]\nf = 1\n[fault.1]\ntime = 0\nkind = meteor\ntarget = r1\n")
    with pytest.raises(ValueError):
        parse_scenario("[scenario]\nf = 1\n[op.1]\ntime = 0\nclient = c1\nop = put\nkey = k\n")


# ------------------------------------------------------------------ corpus and CLI


@pytest.mark.parametrize("name", ["crash-f-n4", "byzantine-dealer-n4", "equivocating-leader-n4"])
def test_corpus_fault_scenarios(name):
    trace = run_scenario(by_name(name))
    bad = {k: v.message for k, v in verdicts(trace).items() if not v.ok}
    assert bad == {}


def test_cli_run_and_dump(tmp_path, capsys):
    assert sim_main(["dump", str(tmp_path)]) == 0
    files = sorted(tmp_path.glob("*.ini"))
    assert len(files) == len(corpus())
    out = tmp_path / "trace.tsv"
    assert sim_main(["run", str(tmp_path / "honest-n4.ini"), "--seed", "4", "--trace", str(out)]) == 0
    assert "PASS honest-n4 (seed 4" in capsys.readouterr().out
    assert out.read_text().count("\n") > 100


def test_cli_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nf = 0\n")
    assert sim_main(["run", str(bad)]) == 2
    assert sim_main(["run", str(tmp_path / "missing.ini")]) == 2
    assert sim_main(["corpus", "--only", "no-such-scenario"]) == 2
    capsys.readouterr()
