"""Command-line interface: reports, files and exit codes."""
import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from shiftforge.cli import main
from shiftforge.formats import read_rule, write_circuit, write_rule
from shiftforge.pqcsim import CircuitSpec, HermitianOp
from shiftforge.shiftrule import ShiftRule

PI = math.pi


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    report = {}
    for line in out.getvalue().splitlines():
        key, _, value = line.partition(": ")
        report[key] = value
    return code, report


@pytest.fixture
def support_file(tmp_path):
    def make(*points):
        path = tmp_path / "support.txt"
        path.write_text("\n".join(points) + "\n")
        return str(path)
    return make


@pytest.fixture
def plus_circuit(tmp_path):
    path = tmp_path / "circuit.json"
    spec = CircuitSpec(((HermitianOp(np.diag([0.0, 1.0])), None),), np.full((2, 2), 0.5),
                       HermitianOp(np.array([[0, 1], [1, 0]])))
    write_circuit(path, spec)
    return str(path)


# --- solve-for-u ---

def test_solve_for_u_feasible(support_file, tmp_path):
    code, rep = run("solve-for-u", "--xi", "1", "--alpha", "1", "--support", support_file("-1/4", "1/4"),
                    "--out", str(tmp_path / "r.txt"))
    assert code == 0 and rep["status"] == "feasible"
    assert float(rep["cost"]) == pytest.approx(2 * PI)
    rule, inst = read_rule(tmp_path / "r.txt")
    assert inst.alpha == (1,) and len(rule) == 2


def test_solve_for_u_infeasible(support_file):
    code, rep = run("solve-for-u", "--xi", "1", "--alpha", "1", "--support", support_file("0"))
    assert code == 2 and rep["status"] == "infeasible"
    assert float(rep["l2_gap"]) == pytest.approx(2 * PI * math.sqrt(2), rel=1e-10)


def test_malformed_rational(support_file, capsys):
    code, _ = run("solve-for-u", "--xi", "1/0", "--alpha", "1", "--support", support_file("0"))
    assert code == 1
    assert "error" in capsys.readouterr().err


# --- dual-opt ---

@pytest.mark.parametrize("xi, alpha, expected, tol", [
    ("1;2;3", "1", 6 * PI, 1e-4),
    ("1/2", "1", PI, 1e-4),
])
def test_dual_opt_1d(xi, alpha, expected, tol):
    code, rep = run("dual-opt", "--xi", xi, "--alpha", alpha)
    assert code == 0 and rep["verdict"] == "OPTIMAL"
    assert float(rep["value"]) == pytest.approx(expected, abs=tol)


def test_dual_opt_pointy_from_file(tmp_path):
    inst = tmp_path / "inst.txt"
    inst.write_text("dim = 2\nxi_plus = 0,2; 1,-2; 1,0; 1,2\nalpha = 1,1\n")
    code, rep = run("dual-opt", str(inst), "--out", str(tmp_path / "r.txt"))
    assert code == 0 and rep["verdict"] == "OPTIMAL"
    assert float(rep["value"]) == pytest.approx(8 * PI**2, rel=1e-3)


def test_dual_opt_plot_and_trace(tmp_path):
    plot, trace = tmp_path / "plot.csv", tmp_path / "trace.csv"
    code, rep = run("dual-opt", "--xi", "1;3", "--alpha", "1", "--plot", str(plot), "--trace", str(trace))
    assert code == 0
    with open(plot, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["a1", "f_star"] and len(rows) == 1025
    values = np.array([float(r[1]) for r in rows[1:]])
    assert np.max(np.abs(values)) <= 1 + 1e-6
    with open(trace, newline="") as fh:
        trows = list(csv.reader(fh))
    assert trows[0] == ["iteration", "n_points", "lp_value", "max_violation"]
    assert len(trows) - 1 == int(rep["iterations"])
    assert b"\r" not in plot.read_bytes() + trace.read_bytes()


def test_dual_opt_iteration_limit(tmp_path):
    inst = tmp_path / "inst.txt"
    inst.write_text("xi_plus = 1;2;3\nalpha = 1\nmax_iterations = 1\n")
    code, rep = run("dual-opt", str(inst), "--out", str(tmp_path / "best.txt"))
    assert code == 3 and "error" in rep
    assert (tmp_path / "best.txt").exists()


# --- sparse-optimal ---

def test_sparse_optimal_classic(tmp_path):
    code, rep = run("sparse-optimal", "--xi", "1", "--alpha", "1", "--out", str(tmp_path / "r.txt"))
    assert code == 0 and rep["verdict"] == "OPTIMAL"
    rule, _ = read_rule(tmp_path / "r.txt")
    assert dict(rule.atoms) == pytest.approx({(-0.25,): PI, (0.25,): -PI}, abs=1e-12)


def test_sparse_optimal_support_bound():
    code, rep = run("sparse-optimal", "--xi", "1;2", "--alpha", "1")
    assert code == 0
    assert float(rep["cost"]) == pytest.approx(4 * PI)
    assert int(rep["support_size"]) <= 4 and rep["within_bound"] == "True"
    assert float(rep["gap"]) <= 1e-5


def test_sparse_optimal_not_pointy():
    code, rep = run("sparse-optimal", "--xi", "1,0;0,1", "--alpha", "1,1")
    assert code == 4 and "dual-opt" in rep["error"]


# --- verify ---

@pytest.fixture
def classic_file(tmp_path, classic_rule):
    from shiftforge.formats import build_instance
    path = tmp_path / "classic.txt"
    write_rule(path, classic_rule, build_instance({"xi_plus": "1", "alpha": "1"}))
    return str(path)


def test_verify_classic(classic_file):
    code, rep = run("verify", classic_file)
    assert code == 0 and rep["verdict"] == "PASS"


def test_verify_zeroed_coefficient(tmp_path):
    path = tmp_path / "broken.txt"
    write_rule(path, ShiftRule.from_atoms({-0.25: PI}))
    code, rep = run("verify", str(path), "--xi", "1", "--alpha", "1")
    assert code == 5 and rep["check_residual"] == "FAIL"
    assert float(rep["residual"]) == pytest.approx(PI, rel=1e-12)


def test_verify_with_circuit(classic_file, plus_circuit):
    code, rep = run("verify", classic_file, "--circuit", plus_circuit)
    assert code == 0
    assert rep["check_circuit_spectrum"] == "pass" and rep["check_finite_difference"] == "pass"
    assert float(rep["fd_max_rel_error"]) <= 1e-5


def test_verify_missing_rule(tmp_path):
    code, _ = run("verify", str(tmp_path / "missing.txt"), "--xi", "1", "--alpha", "1")
    assert code == 1


def test_xi_without_alpha():
    code, _ = run("dual-opt", "--xi", "1")
    assert code == 1


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "shiftforge.cli", "sparse-optimal", "--xi", "1", "--alpha", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "verdict: OPTIMAL" in proc.stdout
