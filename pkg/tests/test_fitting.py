import numpy as np
import pytest

from periseir import (CaseSeries, FitSpec, GapError, InvalidSpec,
                      LengthMismatch, ModelParams, NegativeCount, ParseError,
                      ZeroNorm, endemic_equilibrium_seirs, equilibrium_for,
                      fit, load_case_series, predict_cases, relative_error,
                      save_case_series, synthetic_case_series)

from conftest import SEIRS_KW


def write(tmp_path, text):
    path = tmp_path / "cases.csv"
    path.write_text(text)
    return path


def test_load_case_series_happy_path(tmp_path):
    path = write(tmp_path, "month,cases\n2011-11,10\n2011-12,11.5\n2012-01,9\n")
    series = load_case_series(path)
    assert series.start == "2011-11"
    assert series.counts == pytest.approx([10.0, 11.5, 9.0])
    assert series.month_labels() == ["2011-11", "2011-12", "2012-01"]


@pytest.mark.parametrize("text,err", [
    ("month,cases\n2011-13,1\n2012-01,2\n2012-02,3\n", ParseError),
    ("month,cases\n2011/11,1\n2011-12,2\n2012-01,3\n", ParseError),
    ("month,cases\n2011-11,one\n2011-12,2\n2012-01,3\n", ParseError),
    ("month,cases\n2011-11,nan\n2011-12,2\n2012-01,3\n", ParseError),
    ("wrong,header\n2011-11,1\n2011-12,2\n2012-01,3\n", ParseError),
    ("month,cases\n2011-11,1\n", ParseError),
    ("", ParseError),
    ("month,cases\n2011-11,1\n2012-01,2\n2012-02,3\n", GapError),
    ("month,cases\n2011-11,1\n2011-11,2\n2011-12,3\n", GapError),
    ("month,cases\n2011-11,1\n2011-12,-2\n2012-01,3\n", NegativeCount),
])
def test_load_case_series_rejects(tmp_path, text, err):
    with pytest.raises(err):
        load_case_series(write(tmp_path, text))


def test_case_series_roundtrip(tmp_path, seirs_params):
    series = synthetic_case_series(seirs_params, n_months=14,
                                   steps_per_month=4)
    path = tmp_path / "series.csv"
    save_case_series(series, path)
    back = load_case_series(path)
    assert back.start == series.start
    assert np.array_equal(back.counts, series.counts)


def test_predict_first_sample_is_scaled_initial_prevalence(seirs_params):
    y0 = endemic_equilibrium_seirs(seirs_params)
    pred = predict_cases(seirs_params, "seirs", 6, y0.as_array(), 8)
    assert pred[0] == pytest.approx(seirs_params.s * y0.I, rel=1e-12)
    assert pred.shape == (6,)
    assert np.all(pred > 0)


def test_predict_monthly_mean_benchmark(seirs_params):
    # 35 months of the benchmark scenario average about 932 reported cases
    y0 = equilibrium_for("seirs", seirs_params)
    pred = predict_cases(seirs_params, "seirs", 35, y0, 24)
    assert pred.mean() == pytest.approx(932.0, rel=0.05)


def test_predict_burn_in_changes_start_consistently(seirs_params):
    y0 = np.array([0.9, 0.0, 0.1, 0.0])
    cold = predict_cases(seirs_params, "seirs", 6, y0, 12)
    warm = predict_cases(seirs_params, "seirs", 6, y0, 12, burn_in_years=3)
    assert not np.allclose(cold, warm)
    assert np.array_equal(
        warm, predict_cases(seirs_params, "seirs", 6, y0, 12, burn_in_years=3))
    # burn-in keeps whole years, so the forcing phase is untouched and a
    # full-year mean stays on the same scale as the equilibrium start
    eq = equilibrium_for("seirs", seirs_params).as_array()
    settled = predict_cases(seirs_params, "seirs", 12, eq, 12, burn_in_years=3)
    near = predict_cases(seirs_params, "seirs", 12, eq, 12)
    assert settled.mean() == pytest.approx(near.mean(), rel=0.15)


def test_predict_validates_arguments(seirs_params):
    y0 = equilibrium_for("seirs", seirs_params).as_array()
    with pytest.raises(ValueError):
        predict_cases(seirs_params, "mseirs4", 6, y0)
    with pytest.raises(ValueError):
        predict_cases(seirs_params, "seirs", 0, y0)
    with pytest.raises(ValueError):
        equilibrium_for("sir", seirs_params)


def test_relative_error_properties():
    data = np.array([3.0, 4.0])
    assert relative_error(data, data) == 0.0
    assert relative_error(2.0 * data, data) == pytest.approx(1.0, rel=1e-15)
    assert relative_error(np.zeros(2), data) == pytest.approx(1.0, rel=1e-15)
    series = CaseSeries("2011-09", data)
    assert relative_error(data, series) == 0.0
    with pytest.raises(LengthMismatch):
        relative_error(np.ones(3), data)
    with pytest.raises(ZeroNorm):
        relative_error(np.zeros(2), np.zeros(2))


def test_synthetic_series_deterministic(seirs_params):
    a = synthetic_case_series(seirs_params, noise=0.02, seed=3,
                              steps_per_month=6)
    b = synthetic_case_series(seirs_params, noise=0.02, seed=3,
                              steps_per_month=6)
    c = synthetic_case_series(seirs_params, noise=0.02, seed=4,
                              steps_per_month=6)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)
    clean = synthetic_case_series(seirs_params, steps_per_month=6)
    assert not np.array_equal(a.counts, clean.counts)
    assert np.min(a.counts) >= 0.0


@pytest.mark.parametrize("kw", [
    dict(kind="msir"),
    dict(free=("b0", "s"), fixed={"b0": 80.0, "nu": 36.0, "gamma": 1.8,
                                  "epsilon": 91.0, "mu": 0.0113, "b1": 0.17,
                                  "c1": 0.17, "phi": 0.0}),
    dict(free=("b0",), fixed={"nu": 36.0}),
    dict(free=("b0", "s"),
         fixed={k: v for k, v in SEIRS_KW.items() if k not in ("b0", "s")},
         guess={"s": 1e4}),
    dict(free=("b0", "s"),
         fixed={k: v for k, v in SEIRS_KW.items() if k not in ("b0", "s")},
         guess={"b0": 5.0, "s": 1e4}),
    dict(free=("b0", "s"),
         fixed={k: v for k, v in SEIRS_KW.items() if k not in ("b0", "s")},
         guess={"b0": 80.0, "s": 1e4}, restarts=0),
    dict(free=("b0", "s"),
         fixed={k: v for k, v in SEIRS_KW.items() if k not in ("b0", "s")},
         guess={"b0": 80.0, "s": 1e4}, bounds={"b0": (50.0, 50.0)}),
])
def test_fit_spec_rejects(kw):
    with pytest.raises(InvalidSpec):
        FitSpec(**kw)


def test_fit_scale_only_is_closed_form(seirs_params):
    data = synthetic_case_series(seirs_params, n_months=12, steps_per_month=6)
    spec = FitSpec(free=("s",),
                   fixed={k: v for k, v in SEIRS_KW.items() if k != "s"},
                   guess={"s": 5e4}, steps_per_month=6)
    result = fit(data, spec)
    assert result.converged
    assert result.params.s == pytest.approx(35000.0, rel=1e-9)
    assert result.error < 1e-12


def test_fit_recovers_two_parameters(seirs_params):
    data = synthetic_case_series(seirs_params, n_months=24, steps_per_month=8)
    spec = FitSpec(free=("b1", "phi"),
                   fixed={k: v for k, v in SEIRS_KW.items()
                          if k not in ("b1", "phi")},
                   guess={"b1": 0.4, "phi": 2.0},
                   steps_per_month=8, restarts=2, seed=1)
    result = fit(data, spec)
    assert result.params.b1 == pytest.approx(0.17, rel=0.02)
    dphi = abs((result.params.phi - SEIRS_KW["phi"] + np.pi)
               % (2 * np.pi) - np.pi)
    assert dphi < 0.05
    assert result.error < 1e-3


def test_fit_respects_bounds_and_reports_history(seirs_params):
    data = synthetic_case_series(seirs_params, n_months=18, steps_per_month=6)
    spec = FitSpec(free=("b0", "s"),
                   fixed={k: v for k, v in SEIRS_KW.items()
                          if k not in ("b0", "s")},
                   guess={"b0": 70.0, "s": 2e4},
                   bounds={"b0": (60.0, 80.0)},  # excludes the true 88.25
                   steps_per_month=6, restarts=2, seed=5)
    result = fit(data, spec)
    assert 60.0 <= result.params.b0 <= 80.0
    history = np.array(result.history)
    assert np.all(np.diff(history) <= 0.0)
    assert result.error == pytest.approx(history[-1])
    assert len(result.start_errors) == 2
    assert min(result.start_errors) >= result.error


def test_fit_phase_reported_in_principal_range(seirs_params):
    data = synthetic_case_series(seirs_params, n_months=24, steps_per_month=6)
    spec = FitSpec(free=("phi", "s"),
                   fixed={k: v for k, v in SEIRS_KW.items()
                          if k not in ("phi", "s")},
                   guess={"phi": 1.0, "s": 3e4},
                   steps_per_month=6, restarts=2, seed=2)
    result = fit(data, spec)
    assert 0.0 <= result.params.phi < 2 * np.pi
    assert 0.0 <= result.phi_offset < 2 * np.pi
    # the offset points at the first empirical maximum (month 3 here)
    k = int(np.argmax(data.counts))
    assert result.phi_offset == pytest.approx(2 * np.pi * k / 12.0 % (2 * np.pi))


def test_fit_zero_norm_data_rejected():
    data = CaseSeries("2011-09", np.zeros(12))
    spec = FitSpec(free=("s",),
                   fixed={k: v for k, v in SEIRS_KW.items() if k != "s"},
                   guess={"s": 5e4})
    with pytest.raises(ZeroNorm):
        fit(data, spec)


def test_fit_penalizes_subthreshold_candidates(seirs_params):
    # a box that straddles the epidemic threshold must still come back
    # with a supercritical answer, because subthreshold points are penalized
    data = synthetic_case_series(seirs_params, n_months=18, steps_per_month=6)
    spec = FitSpec(free=("b0", "s"),
                   fixed={k: v for k, v in SEIRS_KW.items()
                          if k not in ("b0", "s")},
                   guess={"b0": 20.0, "s": 2e4},  # subcritical start
                   steps_per_month=6, restarts=3, seed=7)
    result = fit(data, spec)
    assert result.params.b0 * 91.0 / ((0.0113 + 36.0) * (91.0 + 0.0113)) > 1.0
    assert result.error < 0.05
