import csv
import io
import json
import subprocess
import sys

import pytest

from vorpoly import cli, stats


def run_cli(*args, tmp_path=None):
    return cli.main(list(args))


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli.main(["bogus"]) == 2
    assert cli.main([]) == 2
    assert cli.main(["tail", "--experiment", "t1-min", "--r", "1", "--s", "1", "--replicates", "5"]) == 2


def test_bad_config_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"experiment": "t1-min", "r": [1], "s": [1], "extra": 3}')
    assert cli.main(["tail", "--config", str(p)]) == 2
    assert cli.main(["tail", "--config", str(tmp_path / "missing.json")]) == 2


def test_tail_csv_columns_and_fit(tmp_path):
    out = tmp_path / "t.csv"
    code = cli.main(["tail", "--experiment", "t1-min", "--r", "2", "3", "4", "--s", "5",
                     "--replicates", "100", "--seed", "1", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == stats.CSV_COLUMNS
    assert len(rows) == 3 and rows[0]["experiment"] == "t1-min"
    assert cli.main(["fit", str(out)]) in (0, 1)


def test_tail_from_config_is_byte_identical(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({"experiment": "c1-paths", "r": [2, 3], "s": [3], "replicates": 100, "seed": 4}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["tail", "--config", str(cfgp), "--out", str(a)]) == 0
    assert cli.main(["tail", "--config", str(cfgp), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_tail_jsonl(tmp_path):
    out = tmp_path / "t.jsonl"
    assert cli.main(["tail", "--experiment", "lemma7", "--replicates", "200", "--format", "jsonl",
                     "--out", str(out)]) == 0
    rec = json.loads(out.read_text().splitlines()[0])
    assert rec["experiment"] == "lemma7" and rec["n_rep"] == 200


def test_fit_fails_on_increasing_data(tmp_path):
    ests = [stats.TailEstimate("t1-min", h, 100, r=r, s=5) for r, h in zip((1, 2, 3), (10, 20, 40))]
    p = tmp_path / "up.csv"
    p.write_text(stats.to_csv(ests))
    assert cli.main(["fit", str(p)]) == 1
    p.write_text("")
    assert cli.main(["fit", str(p)]) == 2


def test_verify_modified_passes(capsys):
    assert cli.main(["verify", "modified-invariants", "--replicates", "2", "--n", "16"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_verify_confinement_small(capsys):
    assert cli.main(["verify", "confinement", "--replicates", "4"]) == 0
    assert capsys.readouterr().out.count("PASS") == 4


def test_sample_and_svg(tmp_path):
    pts = tmp_path / "p.txt"
    assert cli.main(["sample", "--half", "15", "--seed", "2", "--out", str(pts)]) == 0
    svg = tmp_path / "p.svg"
    assert cli.main(["svg", "--points", str(pts), "--polyomino", "3", "--segment", "0", "0", "3", "1",
                     "--out", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "<polyline" in text and text.rstrip().endswith("</svg>")


def test_sample_modified(tmp_path):
    out = tmp_path / "n.txt"
    assert cli.main(["sample", "--n", "16", "--half", "8", "--out", str(out)]) == 0
    assert "modified n=16" in out.read_text().splitlines()[0]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "vorpoly.cli", "nope"], capture_output=True, text=True)
    assert res.returncode == 2 and "invalid choice" in res.stderr
