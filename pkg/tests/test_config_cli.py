import csv
import io
import json
import subprocess
import sys
from importlib.resources import files

import numpy as np
import pytest
from scipy.stats import chi2

from lvprecision.analytic import analytic_coefficients
from lvprecision.cli import main
from lvprecision.config import dump_model_config, dumps, load_fixture, load_model_config, loads, model_hash
from lvprecision.errors import NonMonotoneThresholds, ParseError, ValidationError
from lvprecision.models import HurdleIrtreeModel, LatentDistribution, LinearFactorModel, TwoPLModel

FIXTURES = files("lvprecision") / "fixtures"
FACTOR, TWOPL, MHGRM = (str(FIXTURES / f"{n}.json") for n in ("one_factor", "twopl", "mhgrm_synthetic"))


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


class TestLoadConfig:
    def test_one_factor_fixture(self, factor_model):
        assert load_model_config(FACTOR) == factor_model

    def test_twopl_fixture(self, twopl_model):
        model = load_model_config(TWOPL)
        assert isinstance(model, TwoPLModel)
        assert model == twopl_model

    def test_bivariate_latent(self):
        model = load_fixture("mhgrm_synthetic")
        assert isinstance(model, HurdleIrtreeModel)
        np.testing.assert_allclose(model.latent.covariance, [[1, 0.58], [0.58, 1]])
        assert model.n_pairs == 14

    def test_parse_error_position(self):
        text = '{\n  "model_type": "2pl",\n  "slopes": [1, 2,]\n}'
        with pytest.raises(ParseError) as info:
            loads(text, source="bad.json")
        assert info.value.line == 3
        assert "bad.json:3:" in str(info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_model_config(tmp_path / "absent.json")

    def test_missing_field_path(self):
        with pytest.raises(ValidationError) as info:
            loads('{"model_type": "2pl", "slopes": [1, 2]}')
        assert info.value.field == "intercepts"

    def test_nested_field_path(self):
        raw = {"model_type": "graded", "items": [
            {"slopes": [1.0], "thresholds": [0.0, 1.0]},
            {"slopes": [1.0], "thresholds": [0.5, 0.2]},
        ]}
        with pytest.raises(NonMonotoneThresholds) as info:
            loads(json.dumps(raw))
        assert info.value.field == "items[1]"

    def test_non_numeric(self):
        with pytest.raises(ValidationError) as info:
            loads('{"model_type": "2pl", "intercepts": ["a"], "slopes": [1]}')
        assert info.value.field == "intercepts"

    def test_unknown_type(self):
        with pytest.raises(ValidationError):
            loads('{"model_type": "rasch"}')

    def test_latent_mean_length(self):
        raw = {"model_type": "2pl", "intercepts": [0], "slopes": [1], "latent": {"mean": [0, 0]}}
        with pytest.raises(ValidationError) as info:
            loads(json.dumps(raw))
        assert info.value.field == "latent.mean"


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["one_factor", "twopl"])
    def test_analytic_identical(self, name, tmp_path):
        model = load_fixture(name)
        path = tmp_path / "model.json"
        dump_model_config(model, path)
        again = load_model_config(path)
        a, b = analytic_coefficients(model), analytic_coefficients(again)
        for key in a:
            assert abs(a[key] - b[key]) <= 1e-12

    def test_hurdle_equal(self, hurdle_model):
        assert loads(dumps(hurdle_model)) == hurdle_model

    def test_hash_stable(self, twopl_model):
        assert model_hash(loads(dumps(twopl_model))) == model_hash(twopl_model)
        other = TwoPLModel([1, 0, -2], [1, 1.5, 2.1], LatentDistribution.standard())
        assert model_hash(other) != model_hash(twopl_model)


class TestScoreTable:
    def test_twopl(self, capsys):
        code, out, _ = run(capsys, "score-table", "--model", TWOPL, "--format", "csv")
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["pattern", "prob", "eap_eta", "s"]
        assert [r[0] for r in rows] == ["0 0 0", "0 0 1", "0 1 0", "0 1 1", "1 0 0", "1 0 1", "1 1 0", "1 1 1"]
        assert sum(float(r[1]) for r in rows) == pytest.approx(1.0)
        assert float(rows[3][2]) == pytest.approx(0.76, abs=0.005)

    def test_single_item(self, capsys, tmp_path):
        path = write(tmp_path, "one.json", {"model_type": "2pl", "intercepts": [0.3], "slopes": [1.2]})
        _, out, _ = run(capsys, "score-table", "--model", path, "--format", "csv")
        _, rows = read_csv(out)
        assert len(rows) == 2
        assert float(rows[0][1]) + float(rows[1][1]) == pytest.approx(1.0)

    def test_two_pair_hurdle(self, capsys, tmp_path):
        model = HurdleIrtreeModel.from_arrays([1.5, 2.0], [0.2, 0.8], [1.0, 1.3], [[-0.5, 0.6], [0.0, 1.0]], 0.58)
        path = tmp_path / "hurdle.json"
        dump_model_config(model, path)
        _, out, _ = run(capsys, "score-table", "--model", str(path), "--format", "csv")
        header, rows = read_csv(out)
        assert header == ["pattern", "prob", "eap_eta_1", "eap_eta_2", "s"]
        assert len(rows) == 16
        assert rows[0][0] == "0 NA 0 NA"

    def test_pretty_output(self, capsys):
        _, out, _ = run(capsys, "score-table", "--model", TWOPL)
        lines = out.splitlines()
        assert len(lines) == 10
        assert "0.7600" in out or "0.76" in lines[5]


class TestAnalytic:
    def test_one_factor(self, capsys):
        _, out, _ = run(capsys, "analytic", "--model", FACTOR)
        values = [line.split()[1] for line in out.splitlines()[2:]]
        assert values == ["0.5821", "0.5090", "0.5821", "0.5821"]

    def test_twopl(self, capsys):
        _, out, _ = run(capsys, "analytic", "--model", TWOPL)
        values = [line.split()[1] for line in out.splitlines()[2:]]
        assert values == ["0.5146", "0.4951", "0.4960", "0.5150"]

    def test_hurdle_unsupported(self, capsys):
        code, _, err = run(capsys, "analytic", "--model", MHGRM)
        assert code == 4
        assert "mc" in err


class TestCurve:
    def test_twopl_summed(self, capsys):
        _, out, _ = run(capsys, "curve", "--model", TWOPL, "--format", "csv")
        header, rows = read_csv(out)
        assert header == ["eta", "true_score"]
        tau = np.array([float(r[1]) for r in rows])
        assert tau.size == 161
        assert np.all(np.diff(tau) > 0)
        assert 0 < tau.min() and tau.max() < 3

    def test_linear_slope(self, capsys):
        _, out, _ = run(capsys, "curve", "--model", FACTOR, "--format", "csv", "--steps", "9")
        data = np.array(read_csv(out)[1], dtype=float)
        np.testing.assert_allclose(np.diff(data[:, 1]) / np.diff(data[:, 0]), 1.5)

    def test_zero_slopes_constant(self, capsys, tmp_path):
        path = write(tmp_path, "flat.json", {"model_type": "2pl", "intercepts": [0.5, -1], "slopes": [0, 0]})
        _, out, _ = run(capsys, "curve", "--model", path, "--format", "csv")
        tau = np.array(read_csv(out)[1], dtype=float)[:, 1]
        np.testing.assert_allclose(tau, tau[0], atol=1e-12)

    def test_eap_curve(self, capsys):
        code, out, _ = run(capsys, "curve", "--model", TWOPL, "--score", "eap", "--format", "csv")
        assert code == 0
        tau = np.array(read_csv(out)[1], dtype=float)[:, 1]
        assert np.all(np.diff(tau) > 0)

    def test_needs_one_dimension(self, capsys):
        assert run(capsys, "curve", "--model", MHGRM)[0] == 3


class TestSurface:
    def _lattice(self, text):
        first, _, rest = text.partition("\n")
        header, rows = read_csv(rest)
        assert header == ["eta1", "eta2", "fitted"]
        data = np.array(rows, dtype=float)
        assert data.shape == (41 * 41, 3)
        return first, data[:, 2].reshape(41, 41)

    def test_hurdle_summed_monotone(self, capsys, hurdle_model):
        _, out, _ = run(capsys, "surface", "--model", MHGRM, "--seed", "1")
        first, fitted = self._lattice(out)
        r2 = float(first.split("=")[1])
        assert first.startswith("# r_squared=") and 0 < r2 < 1
        # the fit is only identified where latent draws occur: check lattice
        # steps inside the ellipse holding 99% of the latent mass
        axis = np.linspace(-3, 3, 41)
        grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
        dist = np.einsum("abi,ij,abj->ab", grid, np.linalg.inv(hurdle_model.latent.covariance), grid)
        inside = dist < chi2.ppf(0.99, 2)
        tol = 1e-3 * np.ptp(fitted)
        steps0 = np.diff(fitted, axis=0)[inside[1:] & inside[:-1]]
        steps1 = np.diff(fitted, axis=1)[inside[:, 1:] & inside[:, :-1]]
        assert steps0.size > 400 and steps1.size > 400
        assert steps0.min() >= -tol and steps1.min() >= -tol

    def test_flat_along_unused_axis(self, capsys, tmp_path):
        raw = {"model_type": "2pl", "intercepts": [1, 0, -2], "slopes": [[1, 0], [1.5, 0], [2, 0]],
               "latent": {"dimension": 2}}
        path = write(tmp_path, "simple.json", raw)
        _, out, _ = run(capsys, "surface", "--model", path, "--seed", "2")
        _, fitted = self._lattice(out)
        along_axis2 = np.ptp(fitted, axis=1).max()
        assert along_axis2 < 0.05 * np.ptp(fitted)

    def test_needs_two_dimensions(self, capsys):
        assert run(capsys, "surface", "--model", TWOPL)[0] == 3


class TestMcCommand:
    def test_2pl_summed_reliability(self, capsys):
        code, out, _ = run(capsys, "mc", "--model", TWOPL, "--score", "sum", "--kind", "reliability",
                           "--n", "1000000", "--seed", "1", "--format", "csv")
        assert code == 0
        header, rows = read_csv(out)
        assert header[:3] == ["coefficient", "value", "method"]
        assert float(rows[0][1]) == pytest.approx(0.4951, abs=0.002)
        assert rows[0][2] == "mc-nonparametric"

    def test_same_seed_same_bytes(self, tmp_path):
        outs = []
        for k in range(2):
            path = tmp_path / f"out{k}.csv"
            assert main(["mc", "--model", TWOPL, "--kind", "prmse", "--latent", "true_sum",
                         "--n", "100000", "--seed", "7", "--format", "csv", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_zero_n_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["mc", "--model", TWOPL, "--n", "0"])
        assert info.value.code == 2

    def test_small_n_is_validation_error(self, capsys):
        assert run(capsys, "mc", "--model", TWOPL, "--n", "500")[0] == 3

    def test_bad_score_selector(self, capsys):
        assert run(capsys, "mc", "--model", TWOPL, "--score", "median", "--n", "100000")[0] == 2

    def test_latent_index_out_of_range(self, capsys):
        assert run(capsys, "mc", "--model", TWOPL, "--kind", "prmse", "--latent", "eta_2", "--n", "100000")[0] == 3

    def test_missing_model_file(self, capsys, tmp_path):
        assert run(capsys, "analytic", "--model", str(tmp_path / "none.json"))[0] == 2

    def test_malformed_json(self, capsys, tmp_path):
        path = write(tmp_path, "bad.json", "{ not json")
        code, _, err = run(capsys, "analytic", "--model", path)
        assert code == 2 and "bad.json:1:" in err

    @pytest.mark.filterwarnings("ignore:n=1000 is small")
    def test_dump_sample(self, capsys, tmp_path):
        dump = tmp_path / "sample.csv"
        run(capsys, "mc", "--model", TWOPL, "--n", "1000", "--seed", "3", "--dump-sample", str(dump))
        header, rows = read_csv(dump.read_text())
        assert header == ["eta_1", "y_1", "y_2", "y_3", "summed"]
        assert len(rows) == 1000

    def test_convergence_command(self, capsys):
        code, out, _ = run(capsys, "convergence", "--model", TWOPL, "--n-grid", "1000,10000",
                           "--method", "simple_linear", "--format", "csv")
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["n", "r_squared", "half_width"]
        assert [r[0] for r in rows] == ["1000", "10000"]

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "lvprecision", "analytic", "--model", FACTOR,
                               "--format", "csv"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith("coefficient,value,method")
