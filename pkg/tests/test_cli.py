import json
import math

import numpy as np
import pytest
from scipy import stats

from uiesampler.cli import RunConfig, main
from uiesampler.dpp import sample_eigenvalues_batch
from uiesampler.ensemble import check_hermitian, direct_gue, read_matrices_binary
from uiesampler.exceptions import InvalidArgumentError
from uiesampler.orthopoly import WeightSpec, build_basis
from uiesampler.stats import read_eigenvalues_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path) as fh:
        return read_eigenvalues_csv(fh)


class TestConfig:
    @pytest.mark.parametrize("field", ["n", "samples", "threads"])
    def test_positive(self, field):
        with pytest.raises(InvalidArgumentError) as e:
            RunConfig(WeightSpec("hermite"), **{field: 0})
        assert e.value.field == field

    def test_seed_range(self):
        with pytest.raises(InvalidArgumentError):
            RunConfig(WeightSpec("hermite"), seed=2**64)


class TestErrors:
    def test_malformed_weight_json(self, capsys):
        code, _, err = run(capsys, "sample", "--weight", '{"kind": "poly", "coeffs": "x"}')
        assert code == 2
        assert json.loads(err)["field"] == "coeffs"

    def test_not_json(self, capsys):
        code, _, err = run(capsys, "sample", "--weight", "{kind")
        assert code == 2 and json.loads(err)["field"] == "weight"

    def test_missing_kind(self, capsys):
        code, _, err = run(capsys, "sample", "--weight", "{}")
        assert code == 2 and json.loads(err)["field"] == "kind"

    def test_bad_flag_value(self, capsys):
        code, _, err = run(capsys, "sample", "--n", "abc")
        assert code == 2 and "error" in json.loads(err)

    def test_unknown_preset(self, capsys):
        code, _, _ = run(capsys, "sample", "--preset", "nope")
        assert code == 2

    def test_bad_format(self, capsys):
        code, _, err = run(capsys, "sample", "--format", "bin")
        assert code == 2 and json.loads(err)["field"] == "format"

    def test_weight_and_preset(self, capsys):
        code, _, _ = run(capsys, "sample", "--preset", "gue", "--weight", '{"kind": "hermite"}')
        assert code == 2

    def test_eqm_on_half_line(self, capsys):
        code, _, err = run(capsys, "eqm", "--weight", '{"kind": "laguerre"}')
        assert code == 2 and json.loads(err)["field"] == "weight"


class TestSample:
    def test_deterministic_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            code, _, _ = run(capsys, "sample", "--preset", "quartic", "--n", "5",
                             "--samples", "10", "--seed", "7", "--out", str(p))
            assert code == 0
        assert a.read_bytes() == b.read_bytes()
        assert read_csv(a).shape == (10, 5)

    def test_matches_library(self, tmp_path, capsys):
        p = tmp_path / "s.csv"
        run(capsys, "sample", "--preset", "hermite", "--n", "4", "--samples", "6", "--seed", "3",
            "--out", str(p))
        ref = sample_eigenvalues_batch(build_basis(WeightSpec("hermite"), 4), 6, seed=3)
        np.testing.assert_array_equal(read_csv(p), ref)

    def test_threads_same_multiset(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["sample", "--preset", "quartic", "--n", "4", "--samples", "130", "--seed", "1"]
        run(capsys, *base, "--out", str(a))
        run(capsys, *base, "--threads", "3", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_n1_hermite_mean(self, tmp_path, capsys):
        p = tmp_path / "s.csv"
        run(capsys, "sample", "--preset", "hermite", "--n", "1", "--samples", "10000",
            "--out", str(p))
        x = read_csv(p).ravel()
        assert abs(x.mean()) < 3 * math.sqrt(0.5 / x.size)

    def test_json_stdout(self, capsys):
        code, out, _ = run(capsys, "sample", "--n", "3", "--samples", "2", "--format", "json")
        d = json.loads(out)
        assert code == 0 and np.array(d["eigenvalues"]).shape == (2, 3)
        assert d["weight"] == {"kind": "scaled-poly", "coeffs": [0.0, 0.0, 1.0]}

    def test_weight_file(self, tmp_path, capsys):
        w = tmp_path / "w.json"
        w.write_text('{"kind": "poly", "coeffs": [0, 0, 0, 0, 1]}')
        code, out, _ = run(capsys, "sample", "--weight", f"@{w}", "--n", "2")
        assert code == 0 and out.startswith("lambda_1,lambda_2\n")


class TestMatrix:
    def test_hermitian_and_trace(self, tmp_path, capsys):
        m, e = tmp_path / "m.bin", tmp_path / "e.csv"
        code, _, _ = run(capsys, "matrix", "--preset", "quartic", "--n", "4", "--samples", "5",
                         "--format", "bin", "--out", str(m), "--eigenvalues", str(e))
        assert code == 0
        M = read_matrices_binary(m)
        rows = np.loadtxt(e, delimiter=",", skiprows=1)
        assert M.shape == (5, 4, 4)
        for A in M:
            check_hermitian(A)
        np.testing.assert_allclose(rows[:, -1], rows[:, :-1].sum(axis=1), atol=1e-12)
        np.testing.assert_allclose(rows[:, -1], np.trace(M, axis1=1, axis2=2).real, atol=1e-12)

    def test_binary_needs_out(self, capsys):
        code, _, _ = run(capsys, "matrix", "--format", "bin")
        assert code == 2

    def test_json(self, capsys):
        code, out, _ = run(capsys, "matrix", "--n", "2", "--samples", "3", "--format", "json")
        d = json.loads(out)
        assert code == 0 and np.array(d["matrices"]).shape == (3, 2, 2, 2)

    def test_gue_preset_entries(self, tmp_path, capsys):
        # preset gue has Q = n x^2; n^{1/2} H is the x^2 ensemble with N(0, 1/4) real parts
        m = tmp_path / "m.bin"
        run(capsys, "matrix", "--preset", "gue", "--n", "6", "--samples", "3000", "--format",
            "bin", "--out", str(m))
        M = read_matrices_binary(m) * math.sqrt(6)
        rng = np.random.default_rng(0)
        D = np.stack([direct_gue(6, rng) for _ in range(3000)])
        assert stats.ks_2samp(M[:, 0, 1].real, D[:, 0, 1].real).statistic < 0.05
        assert stats.ks_2samp(M[:, 2, 2].real, D[:, 2, 2].real).statistic < 0.05


class TestEqm:
    @pytest.mark.parametrize("name,b", [("higher-order", 2.0), ("gue", math.sqrt(2))])
    def test_support(self, capsys, name, b):
        code, out, _ = run(capsys, "eqm", "--preset", name)
        d = json.loads(out)
        assert code == 0
        assert d["support"] == pytest.approx([-b, b], abs=1e-8)
        assert d["mass"] == pytest.approx(1.0, abs=1e-10)

    def test_fields(self, capsys):
        _, out, _ = run(capsys, "eqm", "--preset", "gue")
        d = json.loads(out)
        assert d["c_V_sqrt"] == pytest.approx(math.sqrt(2))
        assert d["density_at_0"] == pytest.approx(math.sqrt(2) / math.pi)

    def test_higher_order_constant(self, capsys):
        _, out, _ = run(capsys, "eqm", "--preset", "higher-order")
        d = json.loads(out)
        assert d["c_V_sqrt"] is None and d["c_V_HO"] == pytest.approx(5 ** (-2 / 7))


class TestKS:
    def test_report(self, capsys):
        argv = ["ks", "--preset", "quartic", "--ns", "5,10", "--samples", "100", "--seed", "2"]
        code, out, _ = run(capsys, *argv)
        reps = json.loads(out)["reports"]
        assert code == 0 and [r["n"] for r in reps] == [5, 10]
        for r in reps:
            assert r["E_nm"] <= r["E_inf_nm"] + r["ks_Fn_F"] + 1e-12
        assert run(capsys, *argv)[1] == out

    def test_bad_list(self, capsys):
        assert run(capsys, "ks", "--ns", "5,x")[0] == 2


class TestStatistics:
    def test_edge(self, capsys):
        code, out, _ = run(capsys, "edge", "--preset", "quartic", "--n", "6", "--samples", "20")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "edge" and len(lines) == 21

    def test_edge_higher_order(self, capsys):
        code, out, _ = run(capsys, "edge", "--preset", "higher-order", "--n", "6",
                           "--samples", "4", "--format", "json")
        d = json.loads(out)
        assert code == 0 and d["higher_order"] and len(d["edge"]) == 4

    def test_bulk(self, capsys):
        code, out, _ = run(capsys, "bulk", "--preset", "cosh", "--n", "6", "--samples", "5")
        vals = np.array(out.splitlines()[1:], dtype=float)
        assert code == 0 and vals.size == 5 and np.all(vals >= 0)


class TestAdd:
    def test_single_copy_matches_sample(self, tmp_path, capsys):
        a, s = tmp_path / "a.csv", tmp_path / "s.csv"
        run(capsys, "add", "--preset", "quartic", "--n", "2", "--samples", "10000",
            "--seed", "1", "--out", str(a))
        run(capsys, "sample", "--preset", "quartic", "--n", "2", "--samples", "10000",
            "--seed", "2", "--out", str(s))
        assert stats.ks_2samp(read_csv(a).ravel(), read_csv(s).ravel()).statistic < 0.02

    def test_per_k_files(self, tmp_path, capsys):
        out = tmp_path / "sum.csv"
        code, _, _ = run(capsys, "add", "--preset", "higher-order", "--n", "3", "--samples", "4",
                         "--copies", "1,2,3,4,5", "--out", str(out))
        assert code == 0
        for k in range(1, 6):
            assert read_csv(tmp_path / f"sum_k{k}.csv").shape == (4, 3)

    def test_plus_term(self, capsys):
        code, out, _ = run(capsys, "add", "--preset", "quartic", "--plus", "gue",
                           "--plus", '{"kind": "scaled-poly", "coeffs": [0, 0, 2]}', "--n", "3")
        assert code == 0 and len(out.splitlines()) == 2

    def test_several_copies_need_out(self, capsys):
        assert run(capsys, "add", "--copies", "1,2")[0] == 2
