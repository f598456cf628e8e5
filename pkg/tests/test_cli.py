import filecmp
import os

import numpy as np
import pytest

import toruslin
from toruslin.cli import EXIT_OK, EXIT_RESONANCE, main
from toruslin.problem import ProblemParseError, parse_problem, \
    parse_problem_text

MINIMAL = """
[lattice]
n 1
d 1
e 1.0 0.0
e 0.3 1.1

[multipliers]
mu_angle 0.6180339887498949

[run]
vmax 4
hband 4
epsilon 0.2
radius 0.5
order 3
pmax 4
qmax 4
"""

RESONANT = MINIMAL.replace("mu_angle 0.6180339887498949", "mu_angle 0.0")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParsing:
    def test_minimal_file_linear_family(self):
        problem = parse_problem_text(MINIMAL)
        assert problem.lattice.n == 1 and problem.lattice.d == 1
        assert problem.pert_records == []
        assert problem.run["order"] == 3

    def test_reference_file_lambda_derived(self):
        problem = parse_problem(toruslin.reference_problem_path())
        lam = problem.data.lam[0, 0]
        assert lam == pytest.approx(np.exp(2j * np.pi * (0.3 + 1.1j)))
        assert len(problem.pert_records) == 12
        assert max(abs(c) for *_, c in problem.pert_records) <= 1e-3

    def test_nonunitary_mu_rejected(self):
        bad = MINIMAL.replace("mu_angle 0.6180339887498949", "mu 1.01 0.0")
        with pytest.raises(ProblemParseError, match="unitary"):
            parse_problem_text(bad)

    def test_inconsistent_lambda_override_rejected(self):
        bad = MINIMAL.replace(
            "[run]", "lambda 0.5 0.0\n\n[run]")
        with pytest.raises(ProblemParseError, match="inconsistent lambda"):
            parse_problem_text(bad)

    def test_consistent_lambda_override_accepted(self):
        lam = complex(np.exp(2j * np.pi * (0.3 + 1.1j)))
        good = MINIMAL.replace(
            "[run]", "lambda %r %r\n\n[run]" % (lam.real, lam.imag))
        problem = parse_problem_text(good)
        assert problem.lam_overridden

    def test_syntax_error_carries_line_number(self):
        bad = MINIMAL.replace("e 0.3 1.1", "e 0.3")
        with pytest.raises(ProblemParseError, match=r"line \d+"):
            parse_problem_text(bad)

    def test_low_order_perturbation_rejected(self):
        bad = MINIMAL.replace(
            "[run]", "[perturbation]\np 1 2 0 1 1e-4 0.0\n\n[run]")
        with pytest.raises(ProblemParseError, match="order >= 2"):
            parse_problem_text(bad)

    def test_roundtrip_identity(self):
        problem = parse_problem(toruslin.reference_problem_path())
        text = problem.to_text()
        again = parse_problem_text(text)
        assert again.to_text() == text
        assert np.array_equal(again.data.mu, problem.data.mu)
        assert np.array_equal(again.lattice.generators,
                              problem.lattice.generators)
        assert again.pert_records == sorted(
            problem.pert_records, key=lambda r: (r[0], r[1], r[2], r[3]))
        assert again.run == problem.run


class TestVerbs:
    def test_check_diophantine_resonant_exit(self, tmp_path):
        prob = write(tmp_path, "resonant.prob", RESONANT)
        out = str(tmp_path / "out")
        code = main(["check-diophantine", prob, "--out", out])
        assert code == EXIT_RESONANCE
        body = (tmp_path / "out" / "resonances.csv").read_text()
        assert len(body.strip().splitlines()) > 1
        assert "0,2,1," in body  # P=0, Q=2, j=1

    def test_resonance_csv_header_only_when_clean(self, tmp_path):
        prob = write(tmp_path, "ok.prob", MINIMAL)
        out = str(tmp_path / "out")
        assert main(["check-diophantine", prob, "--out", out]) == EXIT_OK
        body = (tmp_path / "out" / "resonances.csv").read_text()
        assert body == "p,q,j,l\n"

    def test_linearize_refuses_resonant(self, tmp_path):
        prob = write(tmp_path, "resonant.prob", RESONANT)
        out = str(tmp_path / "out")
        code = main(["linearize", prob, "--out", out])
        assert code == EXIT_RESONANCE

    def test_linearize_residual_rows(self, tmp_path):
        prob = write(tmp_path, "ref.prob",
                     open(toruslin.reference_problem_path()).read())
        out = str(tmp_path / "out")
        code = main(["linearize", prob, "--out", out, "--order", "8",
                     "--pmax", "12", "--qmax", "12"])
        assert code == EXIT_OK
        lines = (tmp_path / "out" / "residuals.csv").read_text().splitlines()
        assert lines[0] == "m,residual"
        assert len(lines) == 1 + 7  # m = 2..8
        phi = (tmp_path / "out" / "phi_v.tls").read_text()
        assert phi.startswith("TLS 1 1 1 8 ")

    def test_domain_geometry_artifacts(self, tmp_path):
        prob = write(tmp_path, "ok.prob", MINIMAL)
        out = str(tmp_path / "out")
        assert main(["domain-geometry", prob, "--out", out]) == EXIT_OK
        text = (tmp_path / "out" / "geometry.txt").read_text()
        assert "hartogs_margin_eta" in text
        verts = (tmp_path / "out" / "hull_vertices.txt").read_text()
        assert len(verts.strip().splitlines()) == 2  # 1-d hull: two endpoints

    def test_certificate_csv_schema(self, tmp_path):
        prob = write(tmp_path, "ok.prob", MINIMAL.replace(
            "[run]", "[perturbation]\np 1 2 0 2 1e-4 0.0\n\n[run]"))
        out = str(tmp_path / "out")
        assert main(["certify", prob, "--out", out, "--pmax", "6",
                     "--qmax", "6"]) == EXIT_OK
        lines = (tmp_path / "out" / "certificate.csv").read_text().splitlines()
        assert lines[0] == "m,domain,norm,majorant,flag"

    def test_error_block_on_missing_file(self, tmp_path, capsys):
        code = main(["linearize", str(tmp_path / "nope.prob")])
        assert code == 1
        err = capsys.readouterr().err
        assert "[error]" in err and "code" in err

    def test_report_on_resonant_instance(self, tmp_path):
        prob = write(tmp_path, "resonant.prob", RESONANT)
        out = str(tmp_path / "out")
        code = main(["report", prob, "--out", out])
        assert code == EXIT_RESONANCE
        body = (tmp_path / "out" / "report.txt").read_text()
        assert "skipped resonant instance" in body

    def test_extended_precision_scan(self, tmp_path):
        prob = write(tmp_path, "ok.prob", MINIMAL)
        out_d = str(tmp_path / "d")
        out_x = str(tmp_path / "x")
        assert main(["check-diophantine", prob, "--out", out_d]) == EXIT_OK
        assert main(["check-diophantine", prob, "--out", out_x,
                     "--precision", "extended"]) == EXIT_OK
        vals_d = [float(ln.split(",")[2]) for ln in
                  (tmp_path / "d" / "divisors.csv").read_text().splitlines()[1:]]
        vals_x = [float(ln.split(",")[2]) for ln in
                  (tmp_path / "x" / "divisors.csv").read_text().splitlines()[1:]]
        assert np.allclose(vals_d, vals_x, rtol=1e-12)

    def test_report_determinism(self, tmp_path):
        prob = write(tmp_path, "ref.prob",
                     open(toruslin.reference_problem_path()).read())
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        args = ["report", prob, "--order", "5", "--pmax", "8", "--qmax", "8"]
        assert main(args + ["--out", out1]) == EXIT_OK
        assert main(args + ["--out", out2]) == EXIT_OK
        names = sorted(os.listdir(out1))
        assert names == sorted(os.listdir(out2))
        match, mismatch, errors = filecmp.cmpfiles(out1, out2, names,
                                                   shallow=False)
        assert mismatch == [] and errors == []
        assert "report.txt" in match
