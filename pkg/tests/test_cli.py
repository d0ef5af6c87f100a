import json
import math

import numpy as np
import pytest

from qsamp import UnknownCase, save_generator
from qsamp.cli import main, reproduce


@pytest.fixture
def golden_file(tmp_path, golden):
    path = tmp_path / "golden.json"
    save_generator(golden, path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestValidate:
    def test_valid(self, capsys, golden_file):
        code, out, _ = run(capsys, "validate", "--input", golden_file)
        assert code == 0
        payload = json.loads(out)
        assert payload["valid"] is True
        assert payload["n_states"] == 2
        assert payload["birth_death"] is True

    def test_invalid_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "n_states": 2,
            "transitions": [{"from": 1, "to": 2, "rate": 1.0}],
            "absorption": [{"state": 1, "rate": 1.0}],
        }))
        code, _, err = run(capsys, "validate", "--input", str(bad))
        assert code == 2
        assert "NonIrreducible" in err


class TestSpectrum:
    def test_fields(self, capsys, golden_file):
        code, out, _ = run(capsys, "spectrum", "--input", golden_file, "--full", "--minors")
        assert code == 0
        payload = json.loads(out)
        assert payload["lambda0"] == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-12)
        assert payload["amplitude"] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)
        assert payload["lambda0_prime"] == pytest.approx(1.0)
        assert len(payload["phi"]) == 2 and len(payload["nu"]) == 2
        assert len(payload["eigenvalues"]) == 2
        assert payload["minor_spectra"]["1"] == pytest.approx([1.0])

    def test_replay_determinism(self, capsys, golden_file):
        _, out1, _ = run(capsys, "spectrum", "--input", golden_file, "--full")
        _, out2, _ = run(capsys, "spectrum", "--input", golden_file, "--full")
        assert out1 == out2


class TestBounds:
    @pytest.mark.parametrize("method", ["path", "spectral", "graph", "exact-bd"])
    def test_methods(self, capsys, golden_file, method):
        code, out, _ = run(capsys, "bounds", "--input", golden_file, "--method", method)
        assert code == 0
        payload = json.loads(out)
        assert payload["bound"] >= payload["amplitude"] - 1e-9

    def test_geodesic_paths(self, capsys, golden_file):
        code, out, _ = run(capsys, "bounds", "--input", golden_file,
                           "--method", "path", "--paths", "geodesic")
        assert code == 0
        assert json.loads(out)["paths"]["1->2"] == [1, 2]


class TestSimulate:
    def test_estimate(self, capsys, golden_file):
        code, out, _ = run(capsys, "--seed", "9", "simulate", "--input", golden_file,
                           "--from", "2", "--to", "1", "--samples", "20000")
        assert code == 0
        payload = json.loads(out)
        assert abs(payload["deviation_sigmas"]) <= 4.0
        assert payload["n_samples"] == 20000

    def test_seed_changes_result(self, capsys, golden_file):
        _, out1, _ = run(capsys, "--seed", "1", "simulate", "--input", golden_file,
                         "--from", "2", "--to", "1", "--samples", "5000")
        _, out2, _ = run(capsys, "--seed", "2", "simulate", "--input", golden_file,
                         "--from", "2", "--to", "1", "--samples", "5000")
        assert json.loads(out1)["mean"] != json.loads(out2)["mean"]


class TestSandwich:
    def test_csv_is_default(self, capsys, golden_file):
        code, out, _ = run(capsys, "sandwich", "--input", golden_file,
                           "--mu0", "delta:2", "--times", "0.1,1,5")
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "t,dist_conditioned,dist_doob,lower,upper"
        assert len(lines) == 4
        for line in lines[1:]:
            t, cond, doob, lo, hi = (float(v) for v in line.split(","))
            assert lo - 1e-9 <= cond <= hi + 1e-9

    def test_json_rows(self, capsys, golden_file):
        code, out, _ = run(capsys, "--format", "json", "sandwich", "--input", golden_file,
                           "--mu0", "uniform", "--times", "1.0")
        payload = json.loads(out)
        assert len(payload["rows"]) == 1


class TestBd:
    def test_entrance(self, capsys):
        code, out, _ = run(capsys, "bd", "entrance", "--rates", "poisson",
                           "--cutoff", "2000")
        assert code == 0
        payload = json.loads(out)
        assert payload["s_series_converges"] == "no"
        assert payload["entrance_boundary"] is False

    def test_converge(self, capsys):
        code, out, _ = run(capsys, "bd", "converge", "--rates", "poisson-accelerated",
                           "--nmax", "2", "--tol", "1e-8", "--max-log2", "9")
        assert code == 0
        payload = json.loads(out)
        assert payload["monotone"] is True
        assert len(payload["ns"]) == 4

    def test_bound(self, capsys):
        code, out, _ = run(capsys, "bd", "bound", "--rates", "poisson-accelerated",
                           "--nmax", "3", "--tol", "1e-8", "--max-log2", "9",
                           "--tail-estimate-at", "512")
        assert code == 0
        payload = json.loads(out)
        assert payload["bound"] > max(payload["truncation_amplitudes"])
        assert payload["tail_certified"] is False


class TestReproduce:
    def test_golden_case_cli(self, capsys):
        code, out, _ = run(capsys, "reproduce", "golden-ratio")
        assert code == 0
        payload = json.loads(out)
        assert payload["all_pass"] is True

    def test_unknown_case(self):
        with pytest.raises(UnknownCase):
            reproduce("not-a-case")

    def test_unknown_case_cli_usage_error(self, capsys):
        code = main(["reproduce", "not-a-case"])
        capsys.readouterr()
        assert code == 1

    @pytest.mark.parametrize("case", ["rho-gt1-amplitude", "rho-gt1-lambda0"])
    def test_fast_cases(self, case):
        result = reproduce(case)
        assert result["all_pass"], result


def test_out_file(tmp_path, capsys, golden_file):
    target = tmp_path / "report.json"
    code = main(["spectrum", "--input", golden_file, "--out", str(target)])
    capsys.readouterr()
    assert code == 0
    assert json.loads(target.read_text())["lambda0"] > 0
