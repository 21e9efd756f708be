import pytest

from udbargain.cli import main
from udbargain.instance import parse_instance, parse_outcome

PATH = "nodes 3\nedge 1 2 1.0 0.5\nedge 2 3 0.6 0.5\n"
TRIANGLE = "nodes 3\nedge 1 2 1 0.5\nedge 2 3 1 0.5\nedge 1 3 1 0.5\n"


@pytest.fixture
def path_file(tmp_path):
    p = tmp_path / "path.txt"
    p.write_text(PATH)
    return p


def test_solve_then_verify(tmp_path, path_file, capsys):
    out = tmp_path / "out.txt"
    trace = tmp_path / "trace.csv"
    assert main(["solve", str(path_file), "--epsilon", "1e-6", "-o", str(out), "--trace", str(trace)]) == 0
    text = out.read_text()
    assert "# status SOLVED" in text
    outcome = parse_outcome(text, 3)
    assert abs(outcome.gamma[0] - 0.2) < 1e-6
    assert trace.read_text().startswith("t,residual\n0,")
    assert main(["verify", str(path_file), str(out), "--epsilon", "1e-6"]) == 0
    assert "eps_ud yes" in capsys.readouterr().out


def test_verify_rejects_loose_outcome(tmp_path):
    inst = tmp_path / "i.txt"
    inst.write_text(PATH)
    out = tmp_path / "o.txt"
    out.write_text("match 1 2\ngamma 1 0.25\ngamma 2 0.75\ngamma 3 0\n")
    assert main(["verify", str(inst), str(out), "--epsilon", "0.1"]) == 0
    assert main(["verify", str(inst), str(out), "--epsilon", "0.01"]) == 1
    assert main(["check", str(inst), str(out)]) == 1


def test_solve_unstable(tmp_path, capsys):
    p = tmp_path / "tri.txt"
    p.write_text(TRIANGLE)
    assert main(["solve", str(p)]) == 1
    assert "UNSTABLE" in capsys.readouterr().out
    assert main(["bp", str(p), "--max-iters", "50"]) == 1


def test_generate_ring_and_check(tmp_path, capsys):
    inst, out = tmp_path / "ring.txt", tmp_path / "ring_out.txt"
    assert main(["generate", "ring", "--N", "2", "--r", "0.3333333333333333", "-o", str(inst), "--outcome", str(out)]) == 0
    ring = parse_instance(inst.read_text())
    assert ring.n == 16 and abs(ring.weight_bound - 3) < 1e-12
    assert main(["verify", str(inst), str(out), "--epsilon", "0.5"]) == 1
    assert "violation 12 13 1.0" in capsys.readouterr().out
    assert main(["check", str(inst), str(out)]) == 1


def test_generate_bipartite_and_gap(tmp_path, capsys):
    p = tmp_path / "b.txt"
    assert main(["generate", "bipartite", "--n-left", "3", "--n-right", "3", "--seed", "1", "-o", str(p)]) == 0
    capsys.readouterr()
    assert main(["gap", str(p)]) == 0
    lines = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
    assert lines["integral"] == "yes"
    assert main(["bp", str(p)]) == 0
    assert "# status converged" in capsys.readouterr().out


def test_bp_matching_init(tmp_path, path_file, capsys):
    m = tmp_path / "m.txt"
    m.write_text("match 1 2\n")
    assert main(["bp", str(path_file), "--init", "matching", "--matching", str(m)]) == 0
    out = capsys.readouterr().out
    assert "# message 2 1 0.4" in out and "gamma 1 0.2" in out
    assert main(["bp", str(path_file), "--init", "matching"]) == 2


def test_demo_slow(capsys):
    assert main(["demo-slow", "--N", "3"]) == 0
    cap = capsys.readouterr()
    assert "WARNING" in cap.err
    assert "first_half_stable" in cap.out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["solve"],
        ["solve", "/nonexistent/file"],
        ["generate", "ring", "--N", "0", "--r", "0.3"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == 2


def test_parse_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("nodes 2\nedge 1 2 5 0.5\n")
    assert main(["solve", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_bad_kappa(path_file):
    assert main(["solve", str(path_file), "--kappa", "0.9"]) == 2
