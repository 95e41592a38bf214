import csv
import json
import math

import pytest

from qmpsched import cli
from qmpsched.report import (BenchRow, RunRecord, bench_csv, geometric_mean, read_records, records_csv,
                             summarize, summary_csv, write_records)
from qmpsched.workload import Workload
from qmpsched.core import JobRequest
from qmpsched.geometry import Cuboid


def rec(cls="A", seed=1, scheduler="cg", defrag=True, speedup=2.0, **kw):
    base = dict(cls=cls, seed=seed, scheduler=scheduler, defrag=defrag, B=5, n_jobs=10, makespan=100,
                packing_makespan=100, sum_l=int(speedup * 100), speedup=speedup, sched_mean_us=1.0,
                sched_min_us=1.0, sched_max_us=1.0, sched_std_us=0.0, stall_steps=0, defrag_count=0,
                cycles=2, latency="synthetic:500", workload="w.json")
    base.update(kw)
    return RunRecord(**base)


# ---------------------------------------------------------------------------
# report library


def test_csv_round_trip(tmp_path):
    rs = [rec(), rec(cls="B", defrag=False, speedup=1.2345678901234567, seed=None)]
    p = tmp_path / "runs.csv"
    p.write_text(records_csv(rs))
    assert read_records([p]) == rs


def test_geometric_mean():
    assert geometric_mean([2.0]) == 2.0
    assert math.isclose(geometric_mean([1.0, 4.0]), 2.0)
    with pytest.raises(ValueError):
        geometric_mean([])


def test_summary_single_run_and_identical_pair():
    s = summarize([rec(speedup=2.5)])
    assert s.geomean["CG w.d."] == 2.5 and s.improvement == {}
    s = summarize([rec(defrag=True, speedup=2.0), rec(defrag=False, speedup=2.0)])
    assert s.improvement[("cg", "A")] == 0.0 and s.pairs[("cg", "A")] == 1
    assert s.configs == ["CG", "CG w.d."]


def test_summary_improvement_and_geomean():
    rs = [rec(seed=1, speedup=2.2), rec(seed=1, defrag=False, speedup=2.0),
          rec(seed=2, speedup=1.0), rec(seed=2, defrag=False, speedup=1.0),
          rec(cls="B", seed=1, speedup=8.0)]
    s = summarize(rs)
    assert math.isclose(s.improvement[("cg", "A")], 5.0)
    assert math.isclose(s.mean_speedup[("CG w.d.", "A")], 1.6)
    assert math.isclose(s.geomean["CG w.d."], math.sqrt(1.6 * 8.0))
    assert "defrag_improvement_pct" in summary_csv(s)


def test_summary_warns_on_unpaired_run():
    rs = [rec(seed=1), rec(seed=1, defrag=False), rec(seed=2)]
    with pytest.warns(UserWarning, match="seed 2"):
        s = summarize(rs)
    assert s.pairs[("cg", "A")] == 1


def test_bench_empty_table():
    text = bench_csv([])
    assert text.strip().split(",")[0] == "scheduler" and len(text.strip().splitlines()) == 1
    assert bench_csv([BenchRow("cg", 5, [])]).splitlines()[1].startswith("cg,5,0,")


# ---------------------------------------------------------------------------
# command line


def test_parse_helpers():
    assert cli.parse_chip("20x12") == (20, 12)
    assert cli.parse_int_list("5,10, 15") == [5, 10, 15]
    for bad in ("20", "0x3", "ax3"):
        with pytest.raises(Exception):
            cli.parse_chip(bad)


def test_generate(tmp_path, capsys):
    assert cli.main(["generate", "--class", "A", "--n", "10", "--instances", "0", "--out", str(tmp_path / "e")]) == 0
    assert list((tmp_path / "e").iterdir()) == []
    for d in ("a", "b"):
        assert cli.main(["generate", "--class", "A", "--n", "10", "--instances", "2", "--seed", "7",
                         "--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["A_000.json", "A_001.json"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    assert cli.main(["generate", "--class", "Q", "--out", str(tmp_path / "q")]) == 1
    assert "unknown class" in capsys.readouterr().err


def test_run_and_report(tmp_path, capsys):
    cli.main(["generate", "--class", "A", "--n", "40", "--instances", "2", "--seed", "3", "--out", str(tmp_path)])
    ws = sorted(str(p) for p in tmp_path.glob("A_*.json"))
    runs = tmp_path / "runs.csv"
    for flag in ("--defrag", "--no-defrag"):
        assert cli.main(["run", *ws, flag, "--latency", "synthetic:500", "--csv", str(runs),
                         "--out-dir", str(tmp_path / "out"), "--validate"]) == 0
    records = read_records([runs])
    assert len(records) == 4 and all(r.speedup > 1 for r in records)
    assert runs.read_text().count("class,seed") == 1  # header written once on append
    ledgers = list((tmp_path / "out").glob("*.ledger.json"))
    assert len(ledgers) == 4 and "stalls" in json.loads(ledgers[0].read_text())
    capsys.readouterr()

    rep = tmp_path / "rep"
    assert cli.main(["report", str(runs), "--out-dir", str(rep)]) == 0
    out = capsys.readouterr()
    assert "geomean" in out.out and out.err == ""
    for name in ("summary.csv", "summary.txt", "speedup.png", "defrag_improvement.png"):
        assert (rep / name).stat().st_size > 0
    rows = list(csv.DictReader(open(rep / "summary.csv")))
    assert {r["table"] for r in rows} == {"speedup", "geomean", "defrag_improvement_pct"}


def test_run_stdout_and_errors(tmp_path, capsys):
    wide = tmp_path / "wide.json"
    Workload(None, None, [JobRequest(0, Cuboid(25, 3, 10), 0)]).save(wide)
    assert cli.main(["run", str(wide)]) == 1
    assert "cannot fit" in capsys.readouterr().err
    ok = tmp_path / "ok.json"
    Workload(None, None, [JobRequest(0, Cuboid(3, 3, 10), 0)]).save(ok)
    assert cli.main(["run", str(ok), "--latency", "synthetic:0"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert rows[0]["makespan"] == "10" and float(rows[0]["speedup"]) == 1.0
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1


def test_report_warns_on_mismatch(tmp_path, capsys):
    p = tmp_path / "r.csv"
    with open(p, "w", newline="") as fh:
        write_records([rec(seed=1), rec(seed=1, defrag=False), rec(seed=2)], fh)
    assert cli.main(["report", str(p), "--no-plots"]) == 0
    assert "warning:" in capsys.readouterr().err


def test_bench_empty_and_small(tmp_path, capsys):
    assert cli.main(["bench", "--batches", "", "--out-dir", str(tmp_path / "e")]) == 0
    assert len((tmp_path / "e" / "bench.csv").read_text().splitlines()) == 1
    assert cli.main(["bench", "--class", "A", "--n", "12", "--batches", "2,4", "--schedulers", "cg",
                     "--out-dir", str(tmp_path / "b")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "b" / "bench.csv")))
    assert [(r["scheduler"], r["B"]) for r in rows] == [("cg", "2"), ("cg", "4")]
    assert (tmp_path / "b" / "bench.png").stat().st_size > 0
