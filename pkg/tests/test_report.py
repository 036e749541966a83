import csv
import json
from types import SimpleNamespace

import numpy as np

from tvode.bounds import BoundCheck
from tvode.discovery import CoefficientTrack, DiscoveryConfig, SplitModel, StateSplit
from tvode.library import build_library
from tvode.preprocess import TimeSeriesTable, ingest_csv
from tvode.report import (
    REPORT_COLUMNS,
    baseline_rows,
    cv_rows,
    oc_rows,
    plot_bound,
    plot_forecast,
    plot_mae_bars,
    plot_series,
    plot_tracks,
    plot_training_fit,
    write_bound_table,
    write_report,
    write_table_csv,
    write_train_report,
)


def sample_rows():
    return [
        {
            "dataset": "sir",
            "source": "0",
            "variable": "S",
            "fold": 1,
            "mode": "CV",
            "w": 7,
            "N": 1,
            "MAE_valid": 1.25,
            "MAE_test": 0.1234567890123456789,
            "diverged": False,
        },
        {
            "dataset": "sir",
            "source": "0",
            "variable": "S",
            "fold": 1,
            "mode": "fixed",
            "w": None,
            "N": None,
            "MAE_valid": None,
            "MAE_test": 2.5,
            "diverged": True,
        },
    ]


def test_report_csv_schema_and_float_round_trip(tmp_path):
    csv_path = tmp_path / "report.csv"
    json_path = tmp_path / "report.json"
    rows = sample_rows()
    write_report(rows, csv_path, json_path)
    with open(csv_path, newline="") as handle:
        read = list(csv.reader(handle))
    assert tuple(read[0]) == REPORT_COLUMNS
    assert len(read) == 3
    assert float(read[1][8]) == rows[0]["MAE_test"]
    assert read[2][5] == "" and read[2][6] == "" and read[2][7] == ""
    mirror = json.loads(json_path.read_text())
    assert mirror[0]["MAE_test"] == rows[0]["MAE_test"]
    assert mirror[0]["diverged"] is False
    assert mirror[1]["diverged"] is True


def test_row_builders_share_the_schema():
    result = SimpleNamespace(state_names=("a", "b"))
    cv = [
        {
            "fold": 1,
            "w": 7,
            "N": 1,
            "mae_valid": 2.0,
            "mae_test": np.array([1.0, 3.0]),
            "diverged": False,
        }
    ]
    rows = cv_rows("sir", "0", result, cv)
    assert len(rows) == 2
    assert rows[0]["mode"] == "CV"
    assert rows[0]["variable"] == "a"
    assert rows[0]["MAE_test"] == 1.0
    assert rows[1]["MAE_test"] == 3.0
    sweep = [
        {
            "fold": 1,
            "variable": "b",
            "w": 14,
            "N": 0,
            "mae_valid": 1.5,
            "mae_test": 0.7,
            "diverged": False,
        }
    ]
    rows = oc_rows("sir", "0", sweep)
    assert rows[0]["mode"] == "OC"
    assert rows[0]["MAE_test"] == 0.7
    compare = [
        {
            "fold": 2,
            "w": 7,
            "N": 1,
            "tv_mae": np.array([0.5, 0.6]),
            "fixed_mae": np.array([1.5, 1.6]),
            "tv_diverged": False,
            "fixed_diverged": False,
        }
    ]
    rows = baseline_rows("sir", "0", compare, ("a", "b"))
    assert [r["mode"] for r in rows] == ["tv", "fixed", "tv", "fixed"]
    assert rows[1]["w"] is None
    assert rows[3]["MAE_test"] == 1.6
    for row in rows:
        assert set(REPORT_COLUMNS) <= set(row)


def test_train_report_blanks_missing_hyperparameters(tmp_path):
    path = tmp_path / "train.csv"
    write_train_report(
        [
            {
                "dataset": "sir",
                "source": "0",
                "variable": "S",
                "mode": "tv",
                "w": 7,
                "N": 1,
                "MAE_train": 0.5,
            },
            {
                "dataset": "sir",
                "source": "0",
                "variable": "S",
                "mode": "fixed",
                "w": None,
                "N": None,
                "MAE_train": 1.5,
            },
        ],
        path,
    )
    read = list(csv.reader(open(path, newline="")))
    assert read[0] == ["dataset", "source", "variable", "mode", "w", "N", "MAE_train"]
    assert read[1][4] == "7"
    assert read[2][4] == "" and read[2][5] == ""


def make_table():
    times = np.arange(40.0)
    states = np.column_stack([np.sin(times / 5.0), np.cos(times / 7.0)])
    inputs = np.sin(times / 3.0)
    covs = np.column_stack([times / 40.0, np.cos(times / 9.0)])
    return TimeSeriesTable(
        times=times,
        states=states,
        state_names=("S", "I"),
        inputs=inputs,
        input_names=("u",),
        covariates=covs,
        covariate_names=("AT", "RH"),
    )


def test_figures_are_rendered(tmp_path):
    table = make_table()
    paths = []

    p = tmp_path / "series.png"
    plot_series(table, p, title="demo")
    paths.append(p)

    p = tmp_path / "fit.png"
    plot_training_fit(table.times, table.states, table.states * 0.9, table.state_names, p)
    paths.append(p)

    descriptors = tuple(build_library(1, 0, 1))
    model = SplitModel(
        descriptors=descriptors,
        state_names=("x1",),
        splits=[
            StateSplit(active=np.ones(2, dtype=bool), fixed_coef=np.zeros(2), varying=(0,))
        ],
        tracks=[
            CoefficientTrack(
                starts=np.array([0, 5]),
                ends=np.array([5, 10]),
                values=np.array([[0.1], [0.2]]),
                underdetermined=np.zeros(2, dtype=bool),
            )
        ],
        config=DiscoveryConfig(window=5, n_varying=1),
    )
    p = tmp_path / "tracks.png"
    plot_tracks(model, np.arange(10.0), p)
    paths.append(p)

    p = tmp_path / "forecast.png"
    plot_forecast(table.times[:10], table.states[:10], table.states[:10] * 1.1, table.state_names, p)
    paths.append(p)

    p = tmp_path / "bars.png"
    plot_mae_bars(sample_rows(), p, title="demo")
    paths.append(p)

    check = BoundCheck(
        times=np.linspace(0.0, 1.0, 20),
        observed=np.linspace(0.0, 0.01, 20),
        bound=np.linspace(0.0, 0.05, 20),
        holds=True,
        domain_ok=True,
        first_exit=20,
        lipschitz=1.0,
        delta=0.01,
        margin=0.0,
    )
    p = tmp_path / "bound.png"
    plot_bound(check, p, title="demo")
    paths.append(p)

    for path in paths:
        assert path.exists()
        assert path.stat().st_size > 1000
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_bound_table_columns(tmp_path):
    check = BoundCheck(
        times=np.array([0.0, 0.5, 1.0]),
        observed=np.array([0.0, 0.004, 0.006]),
        bound=np.array([0.0, 0.0065, 0.017]),
        holds=True,
        domain_ok=True,
        first_exit=3,
        lipschitz=1.0,
        delta=0.01,
        margin=0.0,
    )
    path = tmp_path / "bound.csv"
    write_bound_table(check, path)
    read = list(csv.reader(open(path, newline="")))
    assert read[0] == ["t", "observed_error", "bound", "margin"]
    assert len(read) == 4
    assert float(read[2][3]) == 0.0065 - 0.004


def test_table_csv_round_trips_through_ingest(tmp_path):
    table = make_table()
    path = tmp_path / "data.csv"
    write_table_csv(table, path)
    roles = {"time": "time", "S": "state", "I": "state", "u": "input", "AT": "covariate", "RH": "covariate"}
    back = ingest_csv(path, roles)
    assert back.n_samples == table.n_samples
    assert np.array_equal(back.times, table.times)
    assert np.array_equal(back.states, table.states)
    assert np.array_equal(back.inputs, table.inputs)
    assert np.array_equal(back.covariates, table.covariates)
