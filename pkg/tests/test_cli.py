import csv
import json
import subprocess
import sys

import pytest
from conftest import FIG1_EDGES

import morseph.pipeline
from morseph.cli import EXIT_INVARIANT, EXIT_IO, EXIT_OK, EXIT_USAGE, main


@pytest.fixture
def fig1_file(tmp_path):
    p = tmp_path / "fig1.edges"
    p.write_text("".join(f"v{u} v{v}\n" for u, v in FIG1_EDGES))
    return p


def read_json(p):
    return json.loads(p.read_text())


def test_analyze_fig1(tmp_path, fig1_file, capsys):
    out = tmp_path / "run"
    assert main(["analyze", "--input", str(fig1_file), "--seed", "3", "--out", str(out)]) == EXIT_OK
    s = read_json(out / "summary.json")
    assert s["n_p"] == [9, 11, 2, 0]
    assert s["m_p"] == [2, 2, 0, 0] and s["beta_p"] == [1, 1, 0, 0]
    assert s["critical_weight_count"] == 4
    assert s["euler"]["consistent"] and s["seed"] == 3
    assert s["source"] == {"input": str(fig1_file)}
    assert {p.name for p in out.iterdir()} == {"summary.json", "diagram.csv", "diagram.json", "barcode.csv"}
    rows = list(csv.DictReader((out / "barcode.csv").open()))
    assert [r["death"] for r in rows if r["dim"] == "1"] == ["1.000000"]
    assert "seed=3" in capsys.readouterr().out


def test_analyze_is_byte_deterministic(tmp_path, fig1_file):
    for name in ("a", "b"):
        args = ["analyze", "--input", str(fig1_file), "--seed", "5", "--out", str(tmp_path / name)]
        assert main(args + ["--outputs", "summary,diagram,barcode,morse-dump"]) == EXIT_OK
    for f in ("summary.json", "diagram.csv", "diagram.json", "barcode.csv", "morse_dump.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_from_environment(tmp_path, fig1_file, monkeypatch):
    monkeypatch.setenv("MORSEPH_SEED", "42")
    main(["analyze", "--input", str(fig1_file), "--out", str(tmp_path / "e")])
    assert read_json(tmp_path / "e" / "summary.json")["seed"] == 42
    monkeypatch.delenv("MORSEPH_SEED")
    main(["analyze", "--input", str(fig1_file), "--out", str(tmp_path / "r")])
    assert isinstance(read_json(tmp_path / "r" / "summary.json")["seed"], int)
    monkeypatch.setenv("MORSEPH_SEED", "x")
    assert main(["analyze", "--input", str(fig1_file), "--out", str(tmp_path / "x")]) == EXIT_USAGE


def test_dimension_filtration(tmp_path):
    p = tmp_path / "k5.edges"
    p.write_text("".join(f"{u} {v}\n" for u in range(5) for v in range(u + 1, 5)) + "4 5\n")
    out = tmp_path / "d"
    assert main(["analyze", "--input", str(p), "--filtration", "dimension", "--seed", "1", "--out", str(out)]) == EXIT_OK
    s = read_json(out / "summary.json")
    assert s["m_p"] == s["n_p"] == [6, 11, 10, 5]
    assert s["mu"] == 0.0 and s["critical_weight_count"] == 4


def test_empty_graph(tmp_path):
    p = tmp_path / "empty.edges"
    p.write_text("# nothing here\n")
    assert main(["analyze", "--input", str(p), "--seed", "0", "--out", str(tmp_path / "o")]) == EXIT_OK
    s = read_json(tmp_path / "o" / "summary.json")
    assert s["n_p"] == [0, 0, 0, 0] and s["mu"] == "undefined"
    assert read_json(tmp_path / "o" / "diagram.json")["points"] == []


def test_analyze_model(tmp_path):
    out = tmp_path / "m"
    assert main(["analyze", "--model", "ba:n=60,m=2", "--seed", "4", "--cap", "2", "--out", str(out)]) == EXIT_OK
    s = read_json(out / "summary.json")
    assert s["edges"] == 116 and s["cap"] == 2 and len(s["n_p"]) == 3
    assert s["source"]["model"]["family"] == "ba"


@pytest.mark.parametrize("args", [
    ["analyze", "--out", "x"],
    ["analyze", "--input", "a", "--model", "er:n=3,p=1", "--out", "x"],
    ["analyze", "--model", "er:n=3,p=1", "--cap", "-1", "--out", "x"],
    ["analyze", "--model", "er:n=3,p=2", "--out", "x"],
    ["analyze", "--model", "hgg:n=30,k=2,gamma=2,T=0.5", "--out", "x"],
    ["analyze", "--model", "er:n=3,p=1", "--outputs", "plot", "--out", "x"],
    ["generate", "--model", "ws:n=10,k=3,p=0", "--out", "x"],
    ["generate", "--model", "er:n=10,p=0.1", "--count", "0", "--out", "x"],
    ["compare", "a", "--metric", "wasserstein", "--q", "0.5"],
])
def test_usage_errors(tmp_path, monkeypatch, args):
    monkeypatch.chdir(tmp_path)
    assert main(args) == EXIT_USAGE


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--cap", "three", "--out", "x"])
    assert exc.value.code == 2


def test_io_errors(tmp_path):
    assert main(["analyze", "--input", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == EXIT_IO
    bad = tmp_path / "bad.edges"
    bad.write_text("1 2\n3\n")
    assert main(["analyze", "--input", str(bad), "--out", str(tmp_path / "o")]) == EXIT_IO
    d = tmp_path / "bad.csv"
    d.write_text("dim,birth\n0,1\n")
    assert main(["compare", str(d), "--raw"]) == EXIT_IO
    assert main(["compare", str(tmp_path / "nowhere")]) == EXIT_IO


def test_invariant_failure_exits_4_with_dump(tmp_path, fig1_file, monkeypatch):
    monkeypatch.setattr(morseph.pipeline, "verify_morse", lambda k, m: (False, [(0, 0)]))
    out = tmp_path / "bad"
    assert main(["analyze", "--input", str(fig1_file), "--seed", "1", "--out", str(out)]) == EXIT_INVARIANT
    assert (out / "morse_dump.txt").exists()
    assert not (out / "summary.json").exists()


def test_generate(tmp_path):
    out = tmp_path / "g"
    assert main(["generate", "--model", "ws:n=1000,k=4,p=0.5", "--count", "3", "--seed", "7", "--out", str(out)]) == EXIT_OK
    files = sorted(out.glob("*.edges"))
    assert [f.name for f in files] == ["ws_0.edges", "ws_1.edges", "ws_2.edges"]
    assert all(len(f.read_text().splitlines()) == 2000 for f in files)
    assert read_json(out / "ws_2.json")["seed"] == 9
    again = tmp_path / "h"
    main(["generate", "--model", "ws:n=1000,k=4,p=0.5", "--count", "3", "--seed", "7", "--out", str(again), "--jobs", "2"])
    assert all(f.read_bytes() == (again / f.name).read_bytes() for f in files)
    main(["generate", "--model", "ba:n=1000,m=2", "--seed", "1", "--out", str(tmp_path / "ba")])
    assert len((tmp_path / "ba" / "ba_0.edges").read_text().splitlines()) == 1996


def test_compare_ensembles(tmp_path, capsys):
    for fam, model in (("er", "er:n=80,p=0.05"), ("ws", "ws:n=80,k=4,p=0.3")):
        for i in range(2):
            assert main(["analyze", "--model", model, "--seed", str(i), "--out", str(tmp_path / fam / str(i))]) == EXIT_OK
    capsys.readouterr()
    pairs = tmp_path / "pairs.csv"
    assert main(["compare", f"ER={tmp_path / 'er'}", f"WS={tmp_path / 'ws'}", "--pairs", str(pairs)]) == EXIT_OK
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert {(r["modelA"], r["modelB"]) for r in rows} == {("ER", "ER"), ("ER", "WS"), ("WS", "ER"), ("WS", "WS")}
    assert all(0 <= float(r["mean"]) <= 1 and r["metric"] == "bottleneck" and r["q"] == "" for r in rows)
    assert len(pairs.read_text().splitlines()) == 1 + 1 + 4 + 4 + 1

    one = tmp_path / "er" / "0" / "diagram.json"
    out = tmp_path / "m.csv"
    assert main(["compare", f"A={one}", f"B={one}", "--metric", "wasserstein", "--q", "2", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert all(float(r["mean"]) == 0.0 and r["q"] == "2" for r in rows)


def test_compare_csv_needs_raw(tmp_path, fig1_file):
    main(["analyze", "--input", str(fig1_file), "--seed", "2", "--out", str(tmp_path / "a")])
    csv_path = tmp_path / "a" / "diagram.csv"
    assert main(["compare", str(csv_path)]) == EXIT_IO
    assert main(["compare", str(csv_path), "--raw", "--dim", "1", "--out", str(tmp_path / "o.csv")]) == EXIT_OK
    assert main(["compare", f"x={csv_path}", f"x={csv_path}", "--raw"]) == EXIT_USAGE


def test_module_entry_point(tmp_path, fig1_file):
    r = subprocess.run(
        [sys.executable, "-m", "morseph", "analyze", "--input", str(fig1_file), "--seed", "3", "--out", str(tmp_path / "s")],
        capture_output=True, text=True,
    )
    assert r.returncode == 0, r.stderr
    assert "beta=[1, 1, 0, 0]" in r.stdout
