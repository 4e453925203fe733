import json
import subprocess
import sys

import pytest

from orientcycle.cli import main
from orientcycle.experiments import loads_csv
from orientcycle.graph import Digraph, embedding_problems, Embedding, read_edgelist, write_edgelist
from orientcycle.patterns import OrientationPattern

SUBCOMMANDS = ["gen", "embed", "pipeline", "process", "hitting", "threshold", "verify-pseudo", "posa", "coupling",
               "properties"]


@pytest.fixture
def tri(tmp_path):
    path = tmp_path / "tri.edges"
    write_edgelist(Digraph.from_edges(3, [(0, 1), (1, 2), (2, 0)]), path)
    return path


def test_embed_prints_embedding(tri, capsys):
    assert main(["embed", "--graph", str(tri), "--pattern", "directed:3"]) == 0
    lines = capsys.readouterr().out.split()
    mapping = dict(zip(map(int, lines[0::2]), map(int, lines[1::2])))
    emb = Embedding(3, tuple(mapping[k] for k in range(3)))
    assert not embedding_problems(read_edgelist(tri), OrientationPattern.directed(3), emb)


def test_embed_absent_and_bad_input(tri, capsys):
    assert main(["embed", "--graph", str(tri), "--pattern", "++-"]) == 1
    assert main(["embed", "--graph", str(tri), "--pattern", "directed:4"]) == 2
    assert main(["embed", "--graph", str(tri), "--pattern", "directed:3", "--pin", "0"]) == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--bogus"])
    assert exc.value.code == 2


def test_gen_file_deterministic(tmp_path):
    a, b = tmp_path / "a.edges", tmp_path / "b.edges"
    for out in (a, b):
        assert main(["gen", "--model", "dnp", "--n", "100", "--p", "0.05", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_edgelist(a).n == 100


def test_threshold_row_count(capsys):
    argv = ["threshold", "--pattern", "anti:10", "--n", "10", "--grid", "0.1:0.9:9", "--trials", "20",
            "--engine", "oracle"]
    assert main(argv) == 0
    rows = loads_csv(capsys.readouterr().out)
    assert len(rows) == 9 and [r.p for r in rows] == sorted(r.p for r in rows)


def test_pipeline_report_json(tmp_path, capsys):
    emb = tmp_path / "emb.txt"
    code = main(["pipeline", "run", "--n", "100", "--pattern", "anti:100", "--profile", "desk", "--seed", "1",
                 "--embedding-out", str(emb)])
    rep = json.loads(capsys.readouterr().out)["report"]
    assert code == (0 if rep["ok"] else 1)
    if rep["ok"]:
        assert len(emb.read_text().splitlines()) == 100


def test_hitting_json(capsys):
    assert main(["hitting", "--n", "6", "--trials", "2", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"].startswith("orientcycle.rows")


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_lists_common_flags(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([sub, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--seed", "--trials", "--profile", "--out"):
        assert flag in text
    assert "default: paper" in text


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "orientcycle.cli", "coupling", "--n", "3", "--p", "0.5", "--exact"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout
