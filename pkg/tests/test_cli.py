from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from certbnb.cli import main

CORPUS = Path(__file__).resolve().parents[1] / "src" / "certbnb" / "data" / "corpus"

TINY = "c tiny\nh 1 2 0\n3 -1 0\n5 -2 0\n"
UNSAT_WCNF = "h 1 0\nh -1 0\n2 1 0\n"


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.wcnf"
    p.write_text(TINY)
    return p


def test_solve_tiny(tiny, capsys):
    assert main(["solve", str(tiny)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "s OPTIMUM FOUND" in out
    assert out[out.index("s OPTIMUM FOUND") - 1] == "o 3"
    assert any(l.startswith("v ") for l in out)


def test_solve_and_check_roundtrip(tiny, tmp_path, capsys):
    proof = tmp_path / "tiny.pbp"
    assert main(["solve", str(tiny), "--proof", str(proof)]) == 0
    assert main(["check", str(tiny), str(proof)]) == 0
    assert "s VERIFIED BOUNDS 3 3" in capsys.readouterr().out
    text = proof.read_text().replace("conclusion BOUNDS 3 3", "conclusion BOUNDS 4 4")
    proof.write_text(text)
    assert main(["check", str(tiny), str(proof)]) == 1
    assert "s REJECTED line" in capsys.readouterr().out


def test_unsat_exit_code(tmp_path, capsys):
    inst = tmp_path / "u.wcnf"
    inst.write_text(UNSAT_WCNF)
    proof = tmp_path / "u.pbp"
    assert main(["solve", str(inst), "--proof", str(proof)]) == 20
    assert "s UNSATISFIABLE" in capsys.readouterr().out
    assert main(["check", str(inst), str(proof)]) == 0
    assert "s VERIFIED UNSAT" in capsys.readouterr().out


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.wcnf"
    bad.write_text("h 1 2\n")
    assert main(["solve", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.wcnf")]) == 2


def test_conflict_limit_is_indeterminate(capsys):
    assert main(["solve", str(CORPUS / "desk08.wcnf"), "--conflict-limit", "1"]) == 30
    assert "s UNKNOWN" in capsys.readouterr().out


def test_proof_dir_from_environment(tiny, tmp_path, monkeypatch, capsys):
    out = tmp_path / "proofs"
    out.mkdir()
    monkeypatch.setenv("CERTBNB_PROOF_DIR", str(out))
    assert main(["solve", str(tiny)]) == 0
    assert (out / "tiny.pbp").exists()
    assert main(["check", str(tiny), str(out / "tiny.pbp"), "--verbose"]) == 0
    assert "c rule soli" in capsys.readouterr().out


def test_bench_empty_directory(tmp_path, capsys):
    assert main(["bench", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "summary instances=0" in out
    assert main(["bench", str(tmp_path / "nope")]) == 2


def subset(tmp_path, names):
    d = tmp_path / "corpus"
    d.mkdir()
    lines = ["# brute-force optima"]
    for line in (CORPUS / "oracle.txt").read_text().splitlines():
        if line.split() and Path(line.split()[0]).stem in names:
            lines.append(line)
    for n in names:
        shutil.copy(CORPUS / f"{n}.wcnf", d)
    (d / "oracle.txt").write_text("\n".join(lines) + "\n")
    return d


def test_bench_on_corpus_subset(tmp_path, capsys):
    d = subset(tmp_path, ["desk02", "desk07", "desk16"])
    assert main(["bench", str(d), "--fuzz-proofs"]) == 0
    out = capsys.readouterr().out
    assert "summary instances=3 errors=0 consistent=3/3 accepted=3/3 oracle_match=3/3" in out
    assert "summary logging_overhead" in out and "summary check_ratio" in out
    assert "summary fuzz" in out
    rows = [l for l in out.splitlines() if l.startswith("instance=")]
    assert len(rows) == 3 and all("consistent=1" in r for r in rows)


def test_bench_reports_oracle_mismatch(tmp_path, capsys):
    d = subset(tmp_path, ["desk02"])
    (d / "oracle.txt").write_text("desk02 5\n")
    assert main(["bench", str(d)]) == 1
    assert "oracle_match=0/1" in capsys.readouterr().out
