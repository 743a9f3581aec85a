import json

import numpy as np
import pytest

from cstomo.cli import main
from cstomo.serialize import load_measurement_set
from cstomo.simulate import make_max_entangled, state_to_density


def run(*argv):
    return main([str(a) for a in argv])


class TestSimulateCommand:
    def test_writes_valid_file(self, tmp_path, capsys):
        out = tmp_path / "ms.json"
        assert run("simulate", "--d", 3, "--measurements", 10, "--seed", 4,
                   "--out", out) == 0
        ms = load_measurement_set(str(out))
        assert ms.d == 3 and len(ms) == 10 and ms.seed == 4
        assert ms.truth is not None

    def test_poisson_noise_records_counts(self, tmp_path):
        out = tmp_path / "ms.json"
        assert run("simulate", "--d", 3, "--measurements", 12, "--seed", 1,
                   "--noise", "poisson", "--mean-total-counts", 1e4,
                   "--out", out) == 0
        ms = load_measurement_set(str(out))
        assert ms.counts is not None and ms.calibration == 1e4

    def test_strip_truth(self, tmp_path):
        out = tmp_path / "ms.json"
        run("simulate", "--d", 3, "--measurements", 5, "--strip-truth", "--out", out)
        assert load_measurement_set(str(out)).truth is None

    def test_rejects_zero_measurements(self, tmp_path, capsys):
        assert run("simulate", "--d", 3, "--measurements", 0,
                   "--out", tmp_path / "x.json") == 1

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            run("simulate", "--d", 3, "--measurements", 20, "--seed", 9,
                "--noise", "poisson", "--out", out)
        assert a.read_bytes() == b.read_bytes()

    def test_flagship_campaign_budgets(self, tmp_path):
        # d=7: 2401 = 100% of d^4; d=17: 2506 measurements = 3% of 83521
        out7 = tmp_path / "d7.json"
        assert run("simulate", "--d", 7, "--measurements", 7**4, "--seed", 0,
                   "--out", out7) == 0
        assert len(load_measurement_set(str(out7))) == 2401
        assert round(2506 / 17**4, 2) == 0.03
        out17 = tmp_path / "d17.json"
        assert run("simulate", "--d", 17, "--measurements", 2506, "--seed", 0,
                   "--state", "downconversion", "--spiral-width", 4.0,
                   "--out", out17) == 0
        ms = load_measurement_set(str(out17))
        assert ms.d == 17 and len(ms) == 2506


class TestReconstructCommand:
    def make_input(self, tmp_path, n=24, noise=False, seed=5):
        path = tmp_path / "in.json"
        argv = ["simulate", "--d", 3, "--measurements", n, "--seed", seed,
                "--out", path]
        if noise:
            argv += ["--noise", "poisson", "--mean-total-counts", 1e4]
        assert run(*argv) == 0
        return path

    def test_noiseless_reconstruction_report(self, tmp_path, capsys):
        inp = self.make_input(tmp_path)
        out = tmp_path / "report.json"
        code = run("reconstruct", inp, "--out", out, "--tau", 0.7, "--no-correction")
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["converged"] is True
        assert doc["metrics"]["fidelity"] >= 0.99
        assert "rho_pre_gamma" in doc and "correction" not in doc

    def test_correction_block_in_report(self, tmp_path):
        inp = self.make_input(tmp_path, n=60, noise=True)
        out = tmp_path / "report.json"
        assert run("reconstruct", inp, "--out", out, "--tau", 0.7,
                   "--subsets", 2) == 0
        doc = json.loads(out.read_text())
        assert doc["correction"]["applied"] is True
        assert doc["correction"]["n_subsets"] == 2
        assert "raw" in doc["correction"]
        assert "fidelity" in doc["correction"]["raw"]["metrics"]

    def test_schema_error_no_partial_output(self, tmp_path, capsys):
        inp = self.make_input(tmp_path)
        doc = json.loads(inp.read_text())
        doc["probs"] = doc["probs"][:-1]
        inp.write_text(json.dumps(doc))
        out = tmp_path / "report.json"
        assert run("reconstruct", inp, "--out", out) == 1
        assert not out.exists()

    def test_nonconvergence_exit_code(self, tmp_path):
        inp = self.make_input(tmp_path, n=20, noise=True)
        out = tmp_path / "report.json"
        assert run("reconstruct", inp, "--out", out, "--k-max", 2,
                   "--no-correction") == 3

    def test_degenerate_system_exit_code(self, tmp_path, capsys):
        inp = tmp_path / "empty.json"
        inp.write_text('{"d":3,"projectors":[],"probs":[]}')
        assert run("reconstruct", inp, "--out", tmp_path / "r.json",
                   "--no-correction") == 4

    def test_byte_identical_reruns(self, tmp_path):
        inp = self.make_input(tmp_path, n=60, noise=True)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert run("reconstruct", inp, "--out", out, "--tau", 0.7,
                       "--subsets", 2) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_diagnostics_stream(self, tmp_path):
        inp = self.make_input(tmp_path, n=60, noise=True)
        diag = tmp_path / "diag.csv"
        run("reconstruct", inp, "--out", tmp_path / "r.json", "--tau", 0.7,
            "--subsets", 2, "--diagnostics", diag)
        lines = diag.read_text().strip().splitlines()
        assert lines[0] == "phase,iteration,step,step_tol"
        phases = {ln.split(",")[0] for ln in lines[1:]}
        assert phases == {"raw", "corrected"}


class TestMetricsCommand:
    def test_truth_matrix_fidelity_one(self, tmp_path, capsys):
        ms_path = tmp_path / "ms.json"
        run("simulate", "--d", 3, "--measurements", 10, "--seed", 2, "--out", ms_path)
        rho = state_to_density(make_max_entangled(3))
        mat_path = tmp_path / "rho.json"
        mat_path.write_text(
            json.dumps([[[z.real, z.imag] for z in row] for row in rho])
        )
        assert run("metrics", mat_path, "--measurements", ms_path) == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert doc["fidelity"] == pytest.approx(1.0, abs=1e-9)
        assert doc["residual_inf"] <= 1e-12

    def test_maximally_mixed_vs_d7_target(self, tmp_path, capsys):
        rho = np.eye(49) / 49
        mat_path = tmp_path / "mixed.json"
        mat_path.write_text(
            json.dumps([[[float(z), 0.0] for z in row] for row in rho])
        )
        assert run("metrics", mat_path, "--target", "max-entangled") == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert doc["fidelity"] == pytest.approx(1 / 7, abs=1e-9)
        assert doc["effective_rank"] == 49

    def test_non_hermitian_file_rejected(self, tmp_path, capsys):
        mat_path = tmp_path / "bad.json"
        mat_path.write_text(json.dumps([[[0, 0], [1, 0]], [[0, 0], [0, 0]]]))
        assert run("metrics", mat_path) == 1


class TestSweepCommand:
    def test_single_cell_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run("sweep", "--d", 3, "--fractions", "0.75", "--repeats", 1,
                   "--mean-total-counts", 1e4, "--tau", 0.7, "--seed", 3,
                   "--out", out)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("fraction,repeat,seed,fidelity_raw,fidelity_corrected")
        assert len(lines) == 2  # header + one data row
        assert lines[1].endswith(",ok")
        summary = (tmp_path / "sweep.csv.summary.csv").read_text().strip().splitlines()
        assert len(summary) == 2

    def test_row_count_and_determinism(self, tmp_path):
        args = ("sweep", "--d", 3, "--fractions", "0.5,0.75", "--repeats", 2,
                "--mean-total-counts", 1e4, "--tau", 0.7, "--seed", 1)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(*args, "--out", a) == 0
        assert run(*args, "--out", b) == 0
        rows_a = a.read_text().strip().splitlines()
        assert len(rows_a) == 1 + 2 * 2
        # identical except the wall-clock runtime column
        def strip_runtime(text):
            out = []
            for i, ln in enumerate(text.strip().splitlines()):
                cells = ln.split(",")
                if i:
                    cells[6] = "_"
                out.append(",".join(cells))
            return "\n".join(out)
        assert strip_runtime(a.read_text()) == strip_runtime(b.read_text())
        # summaries carry no timing at all: fully byte-identical
        assert (tmp_path / "a.csv.summary.csv").read_bytes() == \
            (tmp_path / "b.csv.summary.csv").read_bytes()


class TestParser:
    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_input_file(self, tmp_path):
        assert run("reconstruct", tmp_path / "nope.json",
                   "--out", tmp_path / "r.json") == 1
