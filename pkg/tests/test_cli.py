import csv
import json
import math
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from grabit import cli
from grabit.boosting import fit_boosted, grabit_config, load_model, predict_default_prob, save_model
from grabit.data import Dataset, read_csv
from grabit.evaluation import delong_test
from grabit.interpret import partial_dependence
from grabit.linear import LinearModel
from grabit.losses import CensoringBounds, snap_to_bounds
from grabit.sigma import SigmaSearchConfig, select_sigma


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture
def loan_csv(tmp_path):
    """Synthetic export: three predictors, a day stamp, a target censored at 60."""
    rng = np.random.default_rng(0)
    n = 260
    X = rng.normal(size=(n, 3))
    X[:, 2] = np.exp(X[:, 2])                  # positive, skewed
    y = np.clip(40 + 12 * X[:, 0] - 5 * X[:, 1] + 4 * rng.normal(size=n), 0.0, 60.0)
    day = np.sort(rng.integers(0, 400, n))
    path = tmp_path / "loans.csv"
    write_table(path, ["day", "x1", "x2", "x3", "target"],
                [[int(d), repr(float(a)), repr(float(b)), repr(float(c)), repr(float(t))] for d, (a, b, c), t in zip(day, X, y)])
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def train(loan_csv, out, *extra):
    return run("train", "--data", loan_csv, "--target", "target", "--time-col", "day",
               "--out", out, *extra)


class TestTrain:
    def test_round_trip(self, loan_csv, tmp_path):
        out = tmp_path / "m.json"
        assert train(loan_csv, out, "--lower", "-inf", "--upper", "60", "--sigma", "5", "--trees", "30") == 0
        data = read_csv(loan_csv, target="target", time_col="day")
        y, _ = snap_to_bounds(data.y, CensoringBounds(upper=60.0))
        ref = fit_boosted(Dataset(data.X, y), grabit_config(upper=60.0, sigma=5.0, n_trees=30))
        m = load_model(out)
        np.testing.assert_array_equal(m.predict(data.X), ref.predict(data.X))
        rep = json.loads((tmp_path / "m.report.json").read_text())
        assert rep["sigma"] == 5.0 and rep["n_trees"] == 30
        assert rep["final_training_loss"] == ref.train_loss[-1]

    def test_sigma_search_matches_module(self, loan_csv, tmp_path):
        out = tmp_path / "m.json"
        assert train(loan_csv, out, "--upper", "60", "--sigma-search", "--trees", "20") == 0
        data = read_csv(loan_csv, target="target", time_col="day")
        y, _ = snap_to_bounds(data.y, CensoringBounds(upper=60.0))
        sigma, trace = select_sigma(Dataset(data.X, y), grabit_config(upper=60.0, n_trees=20), SigmaSearchConfig())
        header, rows = read_table(tmp_path / "m.sigma.csv")
        assert header == ["sigma", "profile_loglik", "source"]
        assert [(float(a), float(b), c) for a, b, c in rows] == trace.rows()
        assert load_model(out).loss.sigma == sigma

    def test_log_transform_zero_column(self, tmp_path):
        path = tmp_path / "d.csv"
        write_table(path, ["a", "b", "y"], [[1, 0, 1], [2, 3, 0], [3, 1, 1]])
        code = run("train", "--data", path, "--target", "y", "--model", "logit", "--log-transform", "b",
                   "--out", tmp_path / "m.json")
        assert code == cli.EXIT_DATA

    def test_log_transform_applied(self, loan_csv, tmp_path):
        out = tmp_path / "m.json"
        assert train(loan_csv, out, "--upper", "60", "--trees", "5", "--log-transform", "x3") == 0
        assert json.loads((tmp_path / "m.report.json").read_text())["log_transformed"] == ["x3"]

    def test_exit_codes(self, loan_csv, tmp_path):
        out = tmp_path / "m.json"
        assert train(tmp_path / "missing.csv", out, "--upper", "60") == cli.EXIT_IO
        assert train(loan_csv, out, "--upper", "50") == cli.EXIT_BOUNDS
        assert train(loan_csv, out) == cli.EXIT_USAGE                       # grabit without bounds
        assert train(loan_csv, out, "--upper", "60", "--sigma", "1", "--sigma-search") == cli.EXIT_USAGE
        assert run("train", "--data", loan_csv, "--target", "nope", "--out", out, "--upper", "60") == cli.EXIT_DATA
        assert run("bogus") == cli.EXIT_USAGE
        assert not out.exists()

    def test_linear_models(self, loan_csv, tmp_path):
        assert train(loan_csv, tmp_path / "t.json", "--model", "tobit", "--upper", "60") == 0
        assert load_model(tmp_path / "t.json").kind == "tobit"
        assert train(loan_csv, tmp_path / "b.json", "--model", "boosted-logit", "--upper", "60",
                     "--trees", "5") == 0

    def test_input_not_modified(self, loan_csv, tmp_path):
        before = loan_csv.read_bytes()
        train(loan_csv, tmp_path / "m.json", "--upper", "60", "--trees", "3")
        assert loan_csv.read_bytes() == before


class TestPredict:
    def test_latent_and_prob(self, loan_csv, tmp_path):
        train(loan_csv, tmp_path / "m.json", "--upper", "60", "--sigma", "4", "--trees", "20")
        out = tmp_path / "p.csv"
        assert run("predict", "--model", tmp_path / "m.json", "--data", loan_csv, "--target", "target",
                   "--time-col", "day", "--out", out) == 0
        header, rows = read_table(out)
        assert header == ["row", "latent", "prob"]
        m = load_model(tmp_path / "m.json")
        data = read_csv(loan_csv, target="target", time_col="day")
        np.testing.assert_array_equal([float(r[1]) for r in rows], m.predict(data.X))
        np.testing.assert_array_equal([float(r[2]) for r in rows], predict_default_prob(m, data.X))

    def test_prob_at_threshold(self, tmp_path):
        save_model(LinearModel(60.0, np.array([0.0]), "tobit", sigma=3.0, bounds=CensoringBounds(upper=60.0)),
                   tmp_path / "m.json")
        write_table(tmp_path / "d.csv", ["x"], [[1.5]])
        assert run("predict", "--model", tmp_path / "m.json", "--data", tmp_path / "d.csv", "--output", "prob",
                   "--out", tmp_path / "p.csv") == 0
        assert read_table(tmp_path / "p.csv")[1] == [["0", "0.5"]]

    def test_empty_data(self, loan_csv, tmp_path):
        train(loan_csv, tmp_path / "m.json", "--upper", "60", "--trees", "2")
        write_table(tmp_path / "e.csv", ["day", "x1", "x2", "x3", "target"], [])
        out = tmp_path / "p.csv"
        assert run("predict", "--model", tmp_path / "m.json", "--data", tmp_path / "e.csv", "--target", "target",
                   "--time-col", "day", "--out", out) == 0
        assert out.read_text().strip() == "row,latent,prob"

    def test_width_mismatch(self, loan_csv, tmp_path):
        train(loan_csv, tmp_path / "m.json", "--upper", "60", "--trees", "2")
        assert run("predict", "--model", tmp_path / "m.json", "--data", loan_csv,
                   "--out", tmp_path / "p.csv") == cli.EXIT_DATA

    def test_unknown_model_kind(self, loan_csv, tmp_path):
        (tmp_path / "m.json").write_text('{"format_version": 1, "kind": "forest"}')
        assert run("predict", "--model", tmp_path / "m.json", "--data", loan_csv,
                   "--out", tmp_path / "p.csv") == cli.EXIT_DATA


SMALL = "preset = corr0\nn_train = 120\nn_valid = 120\nn_test = 120\nreplications = 1\nseed = 7\n"


@pytest.fixture(scope="module")
def small_study(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    (root / "small.txt").write_text(SMALL)
    outs = []
    for k in range(2):
        out = root / f"run{k}"
        assert cli.main(["simulate", "--scenario", str(root / "small.txt"), "--outdir", str(out)]) == 0
        outs.append(out)
    return outs


class TestSimulate:
    def test_byte_identical(self, small_study):
        a, b = small_study
        names = sorted(os.listdir(a))
        assert names == sorted(os.listdir(b))
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes(), n

    def test_table_has_all_models(self, small_study):
        header, rows = read_table(small_study[0] / "auroc_summary.csv")
        assert header == ["model", "mean", "q2.5", "q97.5", "n_used"]
        assert [r[0] for r in rows] == ["grabit", "boosted_logit", "logit", "tobit"]

    def test_svg_legend_matches_csv(self, small_study):
        _, rows = read_table(small_study[0] / "auroc_summary.csv")
        svg = (small_study[0] / "roc.svg").read_text()
        legend = dict(re.findall(r">(\w+) \(AUROC ([0-9.]+)", svg))
        assert legend == {r[0]: r[1] for r in rows}

    def test_unknown_preset(self, tmp_path):
        assert run("simulate", "--preset", "nope", "--outdir", tmp_path) == cli.EXIT_USAGE


@pytest.fixture
def evaluated(loan_csv, tmp_path):
    out = tmp_path / "ev"
    code = run("evaluate", "--data", loan_csv, "--target", "target", "--time-col", "day",
               "--models", "logit", "constant", "grabit:upper=60,sigma=5,trees=20",
               "--min-train", "100", "--maturity-days", "61", "--event-threshold", "55", "--outdir", out)
    assert code == 0
    return out


class TestEvaluate:
    def test_constant_spec(self, evaluated):
        _, rows = read_table(evaluated / "auroc.csv")
        assert dict((r[0], r[1]) for r in rows)["constant"] == "0.5000"

    def test_delong_row_matches_module(self, evaluated):
        header, rows = read_table(evaluated / "scores.csv")
        labels = np.array([float(r[2]) for r in rows])
        cols = {h: np.array([float(r[k]) for r in rows]) for k, h in enumerate(header) if k >= 3}
        _, drows = read_table(evaluated / "delong.csv")
        for a, b, aa, ab, p in drows:
            d = delong_test(cols[a], cols[b], labels)
            assert (float(aa), float(ab), float(p)) == (d.auroc_a, d.auroc_b, d.p_value)

    def test_repeatable(self, loan_csv, evaluated, tmp_path):
        out = tmp_path / "ev2"
        run("evaluate", "--data", loan_csv, "--target", "target", "--time-col", "day",
            "--models", "logit", "constant", "grabit:upper=60,sigma=5,trees=20",
            "--min-train", "100", "--maturity-days", "61", "--event-threshold", "55", "--outdir", out)
        for n in os.listdir(evaluated):
            assert (evaluated / n).read_bytes() == (out / n).read_bytes()

    def test_missing_time_column(self, loan_csv, tmp_path):
        assert run("evaluate", "--data", loan_csv, "--target", "target", "--time-col", "when",
                   "--models", "logit", "--outdir", tmp_path) == cli.EXIT_DATA

    def test_bad_spec(self, loan_csv, tmp_path):
        assert run("evaluate", "--data", loan_csv, "--target", "target", "--time-col", "day",
                   "--models", "grabit:colour=red", "--outdir", tmp_path) == cli.EXIT_USAGE


class TestCompare:
    def test_identical_scores(self, tmp_path, capsys):
        write_table(tmp_path / "a.csv", ["score"], [[v] for v in (0.1, 0.4, 0.35, 0.8)])
        write_table(tmp_path / "l.csv", ["label"], [[v] for v in (0, 0, 1, 1)])
        assert run("compare", "--scores-a", tmp_path / "a.csv", "--scores-b", tmp_path / "a.csv",
                   "--labels", tmp_path / "l.csv", "--out", tmp_path / "c.csv") == 0
        _, rows = read_table(tmp_path / "c.csv")
        assert float(rows[0][4]) == 1.0
        assert capsys.readouterr().out.splitlines()[0] == "model_a,model_b,auroc_a,auroc_b,p_value"

    def test_length_mismatch(self, tmp_path):
        write_table(tmp_path / "a.csv", ["score"], [[0.1], [0.2]])
        write_table(tmp_path / "l.csv", ["label"], [[0]])
        assert run("compare", "--scores-a", tmp_path / "a.csv", "--scores-b", tmp_path / "a.csv",
                   "--labels", tmp_path / "l.csv") == cli.EXIT_DATA


class TestExplain:
    def _model(self, loan_csv, tmp_path, *extra):
        train(loan_csv, tmp_path / "m.json", "--upper", "60", "--sigma", "5", *extra)
        return tmp_path / "m.json"

    def explain(self, model, loan_csv, out, *extra):
        return run("explain", "--model", model, "--data", loan_csv, "--target", "target", "--time-col", "day",
                   "--outdir", out, *extra)

    def test_importance_depth0(self, loan_csv, tmp_path):
        m = self._model(loan_csv, tmp_path, "--trees", "5", "--depth", "0")
        assert self.explain(m, loan_csv, tmp_path / "o", "--importance") == 0
        _, rows = read_table(tmp_path / "o" / "importance.csv")
        assert len(rows) == 3 and all(float(r[1]) == 0 for r in rows)

    def test_local_at_training_row(self, loan_csv, tmp_path):
        m = self._model(loan_csv, tmp_path, "--trees", "20")
        assert self.explain(m, loan_csv, tmp_path / "o", "--local", "17", "--var", "x1") == 0
        data = read_csv(loan_csv, target="target", time_col="day")
        pred = load_model(m).predict(data.X[17:18])[0]
        _, rows = read_table(tmp_path / "o" / "local_pd.csv")
        hit = [float(v) for g, v in rows if float(g) == data.X[17, 0]]
        assert hit == [pred]

    def test_pd_flat_for_ignored_variable(self, loan_csv, tmp_path):
        # a single depth-1 tree splits on one variable only
        m = self._model(loan_csv, tmp_path, "--trees", "1", "--depth", "1")
        model = load_model(m)
        unused = [j for j in range(3) if j != model.trees[0].feature[0]][0]
        name = ["x1", "x2", "x3"][unused]
        assert self.explain(m, loan_csv, tmp_path / "o", "--pd", name) == 0
        _, rows = read_table(tmp_path / "o" / "pd.csv")
        vals = np.array([float(v) for _, v in rows])
        assert np.ptp(vals) <= 1e-12
        data = read_csv(loan_csv, target="target", time_col="day")
        np.testing.assert_allclose(vals, partial_dependence(model, data, unused).values, rtol=0, atol=1e-12)
        assert (tmp_path / "o" / "pd.svg").read_text().startswith("<svg")

    def test_pd_two_variables_and_local_importance(self, loan_csv, tmp_path):
        m = self._model(loan_csv, tmp_path, "--trees", "10")
        assert self.explain(m, loan_csv, tmp_path / "o", "--pd", "x1,x2", "--grid-size", "4") == 0
        assert len(read_table(tmp_path / "o" / "pd2d.csv")[1]) == 16
        assert self.explain(m, loan_csv, tmp_path / "o", "--local", "3", "--interval", "ii", "--winsorize") == 0
        assert len(read_table(tmp_path / "o" / "local_importance.csv")[1]) == 3

    def test_errors(self, loan_csv, tmp_path):
        m = self._model(loan_csv, tmp_path, "--trees", "3")
        assert self.explain(m, loan_csv, tmp_path / "o", "--pd", "nope") == cli.EXIT_DATA
        assert self.explain(m, loan_csv, tmp_path / "o") == cli.EXIT_USAGE
        assert self.explain(m, loan_csv, tmp_path / "o", "--local", "3", "--var", "x1",
                            "--interval", "iv") == cli.EXIT_USAGE


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "grabit.cli", "compare", "--scores-a", "x", "--scores-b", "x",
                           "--labels", "x"], capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == cli.EXIT_IO
    assert "x" in proc.stderr
    assert math.isfinite(cli.EXIT_IO)
