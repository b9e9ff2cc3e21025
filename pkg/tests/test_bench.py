"""Benchmark harness: configuration, CSV, trend rules and the avss-bench command."""
import io

import pytest

from avss.bench import (
    CSV_HEADER,
    BenchConfig,
    BenchResult,
    assert_trends,
    configs_for,
    emit_csv,
    loglog_slope,
    main,
    non_timing,
    parse_csv,
    run_bench,
    threshold_for,
)


def result(scheme, op, n, latency, size=100, throughput=None):
    return BenchResult(scheme, op, n, threshold_for(n), throughput or 1000 / latency, latency, latency / 10, size)


def test_threshold():
    assert [threshold_for(n) for n in (4, 7, 10, 16)] == [2, 3, 4, 6]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(scheme="rsa", op="share"),
        dict(scheme="ped", op="sign"),
        dict(scheme="plain", op="share"),
        dict(scheme="ped", op="share", ns=()),
        dict(scheme="ped", op="share", ns=(5,)),
        dict(scheme="ped", op="share", duration=3, warmup=2, cooldown=1),
        dict(scheme="ped", op="share", warmup=-1),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BenchConfig(**kwargs).validate()


def test_configs_add_plain_baseline_for_e2e():
    cfgs = configs_for(["ped", "kzg"], ["verify", "e2e_put"], [4])
    assert [(c.scheme, c.op) for c in cfgs] == [
        ("ped", "verify"),
        ("kzg", "verify"),
        ("ped", "e2e_put"),
        ("kzg", "e2e_put"),
        ("plain", "e2e_put"),
    ]


def test_csv_round_trip_keeps_non_timing_fields(tmp_path):
    rows = [result("ped", "share", 4, 1.25, 728), result("kzg", "verify", 10, 3.5, 654)]
    path = tmp_path / "out.csv"
    emit_csv(rows, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3 and lines[0] == ",".join(CSV_HEADER)
    back = parse_csv(path)
    assert [non_timing(r) for r in back] == [non_timing(r) for r in rows]
    assert back[0].latency_mean_ms == pytest.approx(1.25)


def test_empty_csv_is_header_only():
    buf = io.StringIO()
    emit_csv([], buf)
    assert buf.getvalue() == ",".join(CSV_HEADER) + "\n"
    assert parse_csv(io.StringIO(buf.getvalue())) == []


def test_csv_rejects_foreign_header():
    with pytest.raises(ValueError):
        parse_csv(io.StringIO("a,b\n1,2\n"))


def test_loglog_slope_recovers_exponent():
    assert loglog_slope([(n, 3 * n**2) for n in (4, 10, 16)]) == pytest.approx(2.0)
    assert loglog_slope([(n, 7.0) for n in (4, 10, 16)]) == pytest.approx(0.0)


def test_constant_share_cost_fails_superlinearity():
    flat = [result(s, "share", n, 2.0, 40 * n if s == "ped" else 654) for s in ("ped", "kzg") for n in (4, 10, 16)]
    verdict = assert_trends(flat)
    assert set(verdict.failing()) == {"share-superlinear[ped]", "share-superlinear[kzg]"}


def test_expected_shapes_pass():
    rows = []
    for n in (4, 10, 16):
        rows += [
            result("ped", "share", n, 0.1 * n**1.5, 40 * n),
            result("kzg", "share", n, 0.1 * n**1.5, 654),
            result("ped", "verify", n, 0.05 * n, 40 * n),
            result("kzg", "verify", n, 3.0, 654),
            result("ped", "recover_contrib", n, 4.0, 40 * n),
            result("kzg", "recover_contrib", n, 2.0, 654),
        ]
    rows += [result("plain", "e2e_put", 4, 1.0, 0, throughput=1000), result("ped", "e2e_put", 4, 1.0, 0, throughput=600)]
    verdict = assert_trends(rows)
    assert verdict.ok, verdict.failing()
    names = {c.name for c in verdict.checks}
    assert {"recover_contrib-ratio[ped:kzg,n=10]", "e2e-overhead[ped,n=4]", "share-bytes-constant[kzg]"} <= names


def test_trend_violations_named():
    rows = [result("ped", "verify", n, lat, 0) for n, lat in ((4, 1.0), (10, 0.9), (16, 1.2))]
    rows += [result("kzg", "recover_contrib", n, lat, 0) for n, lat in ((4, 1.0), (10, 5.0), (16, 1.0))]
    assert set(assert_trends(rows).failing()) == {"verify-increasing[ped]", "recover_contrib-flat[kzg]"}


def test_too_narrow_for_trends():
    with pytest.raises(ValueError):
        assert_trends([result("ped", "share", 4, 1.0)])


def test_short_micro_run():
    cfg = BenchConfig("ped", "verify", ns=(4, 7), duration=0.6, warmup=0.1, cooldown=0.1, min_samples=5, slice_seconds=0.05)
    out = run_bench(cfg)
    assert [(r.n, r.k) for r in out] == [(4, 2), (7, 3)]
    assert all(r.samples >= 5 and not r.flagged and r.latency_mean_ms > 0 for r in out)
    assert out[0].share_bytes < out[1].share_bytes


def test_short_e2e_run():
    cfg = BenchConfig("plain", "e2e_put", ns=(4,), duration=1.0, warmup=0.1, cooldown=0.1, e2e_clients=2, e2e_puts=5, min_samples=3)
    (r,) = run_bench(cfg)
    assert r.share_bytes == 0 and r.throughput_ops_s > 0 and r.samples >= 3


def test_cli_writes_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    argv = ["--scheme", "kzg", "--op", "verify", "--n", "4", "--duration", "0.4", "--warmup", "0.05", "--cooldown", "0.05"]
    assert main(argv + ["--out", str(out)]) == 0
    rows = parse_csv(out)
    assert [(r.scheme, r.op, r.n) for r in rows] == [("kzg", "verify", 4)]
    capsys.readouterr()


def test_cli_errors(tmp_path, capsys):
    assert main(["--n", "5", "--op", "verify"]) == 2
    assert main(["--op", "verify", "--scheme", "ped", "--n", "4", "--duration", "0.3", "--warmup", "0.05",
                 "--cooldown", "0.05", "--out", str(tmp_path / "no" / "dir.csv")]) == 2
    # a single n cannot show a trend
    assert main(["--op", "verify", "--scheme", "ped", "--n", "4", "--duration", "0.3", "--warmup", "0.05",
                 "--cooldown", "0.05", "--assert-trends"]) == 1
    capsys.readouterr()
