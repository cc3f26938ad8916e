import csv
import io
import json
from fractions import Fraction

import pytest

from qsilab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return rows


@pytest.fixture
def orth_pair(tmp_path):
    path = tmp_path / "orth_pair.json"
    path.write_text(json.dumps({"n": 2, "dim": 2, "partition": [[1], [2]]}))
    return str(path)


@pytest.fixture
def figure_instance(tmp_path):
    # 12-cycle with the distinguished block repeated three times
    path = tmp_path / "cycle12.json"
    path.write_text(
        json.dumps(
            {"n": 12, "dim": 2, "partition": [[1, 2, 5, 6, 9, 10], [3, 4, 7, 8, 11, 12]]}
        )
    )
    return str(path)


@pytest.fixture
def orth_triple(tmp_path):
    path = tmp_path / "orth3.json"
    path.write_text(json.dumps({"n": 3, "dim": 3, "partition": [[1], [2], [3]]}))
    return str(path)


class TestTestCommand:
    def test_swap_orthogonal_pair(self, capsys, orth_pair):
        code, out, _ = run_cli(capsys, "test", "--kind", "swap", "--instance", orth_pair,
                               "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert float(row["p_circuit"]) == pytest.approx(0.5, abs=1e-12)
        assert float(row["p_formula"]) == pytest.approx(0.5, abs=1e-12)
        assert float(row["abs_diff"]) <= 1e-9
        assert row["p_rational"] == "1/2"

    def test_circle_on_repeated_alignment(self, capsys, figure_instance):
        code, out, _ = run_cli(capsys, "test", "--kind", "circle", "--instance",
                               figure_instance, "--mode", "formula", "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert float(row["p_formula"]) == pytest.approx(0.25, abs=1e-12)
        assert row["p_rational"] == "1/4"

    def test_permutation_on_yes_instance(self, capsys, tmp_path):
        path = tmp_path / "yes.json"
        path.write_text(json.dumps({"n": 3, "dim": 2, "partition": [[1, 2, 3]]}))
        code, out, _ = run_cli(capsys, "test", "--kind", "permutation",
                               "--instance", str(path), "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert float(row["p_circuit"]) == pytest.approx(1.0, abs=1e-12)

    def test_malformed_instance_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run_cli(capsys, "test", "--kind", "swap", "--instance", str(bad))
        assert code == 2
        assert "error" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "test", "--kind", "swap",
                             "--instance", str(tmp_path / "nope.json"))
        assert code == 2

    def test_cap_violation_exits_3(self, capsys, tmp_path):
        path = tmp_path / "big.json"
        path.write_text(json.dumps({"n": 8, "dim": 2, "partition": [[1, 2, 3, 4, 5, 6, 7, 8]]}))
        code, _, err = run_cli(capsys, "test", "--kind", "permutation",
                               "--instance", str(path), "--mode", "circuit")
        assert code == 3
        assert "capped" in err

    def test_unwritable_output_exits_4(self, capsys, orth_pair, tmp_path):
        target = tmp_path / "no_such_dir" / "out.csv"
        code, _, _ = run_cli(capsys, "test", "--kind", "swap", "--instance", orth_pair,
                             "--out", str(target))
        assert code == 4

    def test_json_record(self, capsys, orth_pair):
        code, out, _ = run_cli(capsys, "test", "--kind", "swap", "--instance", orth_pair,
                               "--json", "--seed", "7")
        assert code == 0
        record = json.loads(out)
        assert record["command"] == "test"
        assert record["seed"] == 7
        assert record["outputs"]["p_rational"] == "1/2"
        assert "wall_time_ms" in record and "run_id" in record


class TestProtocolCommand:
    def test_srs_exact_all_orthogonal(self, capsys, orth_triple):
        code, out, _ = run_cli(capsys, "protocol", "srs", "--instance", orth_triple,
                               "--m", "2", "--exact", "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert row["value_rational"] == "1/4"
        assert float(row["value_float"]) == pytest.approx(0.25)

    def test_rcir_exact_prime(self, capsys):
        code, out, _ = run_cli(capsys, "protocol", "rcir", "--n", "7", "--r", "3",
                               "--exact", "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert row["value_rational"] == "1/7"

    def test_rcir_monte_carlo_near_exact(self, capsys):
        code, out, _ = run_cli(capsys, "protocol", "rcir", "--n", "4", "--r", "2",
                               "--trials", "4000", "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        p_hat = float(row["p_hat"])
        assert abs(p_hat - 1 / 3) <= 5 * (1 / 3 * 2 / 3 / 4000) ** 0.5
        assert float(row["ci_lo"]) <= p_hat <= float(row["ci_hi"])

    def test_mc_is_seed_deterministic(self, capsys):
        _, out1, _ = run_cli(capsys, "protocol", "rcir", "--n", "4", "--r", "2",
                             "--trials", "500", "--seed", "3")
        _, out2, _ = run_cli(capsys, "protocol", "rcir", "--n", "4", "--r", "2",
                             "--trials", "500", "--seed", "3")
        assert out1 == out2

    def test_missing_inputs_exit_2(self, capsys):
        code, _, _ = run_cli(capsys, "protocol", "srs", "--exact")
        assert code == 2
        code, _, _ = run_cli(capsys, "protocol", "rcir", "--n", "4", "--r", "4", "--exact")
        assert code == 2


class TestSweepCommand:
    def test_perm_soundness_rows(self, capsys, tmp_path):
        out_file = tmp_path / "perm.csv"
        code, _, _ = run_cli(capsys, "sweep", "perm-soundness", "--n-min", "2",
                             "--n-max", "6", "--out", str(out_file), "--seed", "1")
        assert code == 0
        rows = parse_csv(out_file.read_text())
        assert len(rows) == sum(n - 1 for n in range(2, 7))
        for row in rows:
            n, l = int(row["n"]), int(row["l"])
            num, den = row["soundness_rational"].split("/")
            import math

            assert Fraction(int(num), int(den)) == Fraction(
                math.factorial(l) * math.factorial(n - l), math.factorial(n)
            )
        sidecar = tmp_path / "perm.json"
        assert sidecar.exists()
        record = json.loads(sidecar.read_text())
        assert record["record"]["command"] == "sweep"
        assert len(record["rows"]) == len(rows)

    def test_rerun_is_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(capsys, "sweep", "rcir-vs-bound", "--n-min", "2", "--n-max", "10",
                "--out", str(a), "--seed", "5")
        run_cli(capsys, "sweep", "rcir-vs-bound", "--n-min", "2", "--n-max", "10",
                "--out", str(b), "--seed", "5")
        assert a.read_bytes() == b.read_bytes()

    def test_rcir_sweep_respects_bound(self, capsys, tmp_path):
        out_file = tmp_path / "rcir.csv"
        run_cli(capsys, "sweep", "rcir-vs-bound", "--n-min", "2", "--n-max", "12",
                "--out", str(out_file), "--seed", "1")
        rows = parse_csv(out_file.read_text())
        assert rows and all(row["within_bound"] == "true" for row in rows)
        for row in rows:
            assert float(row["exact_float"]) <= float(row["bound_float"]) + 1e-15

    def test_srs_sweep_bound_column(self, capsys, tmp_path):
        out_file = tmp_path / "srs.csv"
        run_cli(capsys, "sweep", "srs-vs-m", "--m-max", "5", "--out", str(out_file),
                "--seed", "1")
        rows = parse_csv(out_file.read_text())
        assert len(rows) == 5
        for row in rows:
            assert row["within_bound"] == "true"
            assert float(row["two_identical_float"]) <= float(row["bound_float"])

    def test_qbounds_sweep(self, capsys, tmp_path):
        out_file = tmp_path / "q.csv"
        run_cli(capsys, "sweep", "qbounds", "--n-min", "4", "--n-max", "16",
                "--out", str(out_file), "--seed", "1")
        rows = parse_csv(out_file.read_text())
        assert rows and all(row["holds"] == "true" for row in rows)
        assert all(row["case"] != "uncovered" for row in rows)


class TestBoundsCommand:
    def test_two_block(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "two-block", "--n", "6", "--l", "3",
                               "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert row["value_rational"] == "1/20"

    def test_eq2(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "eq2", "--n", "4", "--r", "2",
                               "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert row["value_rational"] == "5/12"

    def test_q_with_case(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "q", "--n", "12", "--r", "6", "--s", "3",
                               "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert row["value_rational"] == "1/616"
        assert row["case"] == "s=r/2"

    def test_gap(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "gap", "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert float(row["trace_dist"]) == pytest.approx(0.5, abs=1e-10)
        assert row["achieves_lower_bound"] == "true"

    def test_basel(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "basel", "--n", "6", "--seed", "1")
        assert code == 0
        (row,) = parse_csv(out)
        assert float(row["pi2_over_6n"]) == pytest.approx(0.27416, abs=5e-6)
