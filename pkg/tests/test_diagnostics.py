"""Statistical diagnostics: calibration oracles, fits, the surface."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopsim.data import generate_linear
from loopsim.density import InsufficientSampleError
from loopsim.diagnostics import (
    autonomy_fit,
    breusch_pagan,
    normality_test,
    stddev_surface,
)
from loopsim.engine import SETTING_SAMPLING, LoopConfig


# -- normality test ----------------------------------------------------

def test_normality_null_calibration():
    """Rejection rate at 0.05 stays within [0.01, 0.10] under the null."""
    rng = np.random.default_rng(2024)
    rejections = sum(
        normality_test(rng.normal(size=5000))[1] < 0.05 for _ in range(200))
    assert 0.01 <= rejections / 200 <= 0.10


def test_normality_power_against_uniform():
    rng = np.random.default_rng(2024)
    hits = sum(
        normality_test(rng.uniform(size=5000))[1] < 0.05 for _ in range(200))
    assert hits / 200 >= 0.95


def test_normality_bimodal_mixture_is_flagged():
    rng = np.random.default_rng(77)
    sample = np.concatenate([rng.normal(-3.0, 1.0, 2500),
                             rng.normal(3.0, 1.0, 2500)])
    assert normality_test(sample)[1] < 0.01


def test_normality_needs_twenty_points():
    with pytest.raises(InsufficientSampleError):
        normality_test(np.zeros(19))


@given(st.floats(0.1, 50), st.floats(-100, 100))
@settings(max_examples=40, deadline=None)
def test_normality_statistic_affine_invariant(a, b):
    rng = np.random.default_rng(9)
    x = rng.normal(size=500)
    k0, _ = normality_test(x)
    k1, _ = normality_test(a * x + b)
    assert abs(k0 - k1) < 1e-8


# -- homoscedasticity test ---------------------------------------------

def test_bp_null_calibration():
    rng = np.random.default_rng(77)
    t = np.arange(500, dtype=float)
    rejections = sum(
        breusch_pagan(rng.normal(size=500), t) < 0.05 for _ in range(200))
    assert 0.01 <= rejections / 200 <= 0.10


def test_bp_null_pvalues_roughly_uniform():
    rng = np.random.default_rng(99)
    t = np.arange(500, dtype=float)
    pvals = np.sort([breusch_pagan(rng.normal(size=500), t) for _ in range(200)])
    grid = (np.arange(200) + 1) / 200
    assert np.max(np.abs(pvals - grid)) < 0.1


def test_bp_detects_variance_trend():
    rng = np.random.default_rng(3)
    t = np.arange(500, dtype=float)
    hits = sum(
        breusch_pagan(rng.normal(size=500) * (0.1 + t / 250.0), t) < 0.01
        for _ in range(100))
    assert hits >= 95


def test_bp_zero_residuals_convention():
    assert breusch_pagan(np.zeros(50), np.arange(50.0)) == 1.0


def test_bp_rejects_constant_regressor():
    with pytest.raises(ValueError):
        breusch_pagan(np.random.default_rng(0).normal(size=50), np.full(50, 2.0))


def test_bp_rejects_short_input():
    with pytest.raises(ValueError):
        breusch_pagan(np.zeros(5), np.arange(5.0))


# -- autonomy fit ------------------------------------------------------

def test_autonomy_fit_recovers_decay_rate():
    steps = np.arange(0, 2000, 25, dtype=float)
    trace = 0.99**steps
    fit = autonomy_fit(steps, trace)
    assert fit.slope == pytest.approx(math.log(0.99), abs=1e-3)
    assert fit.r2 > 0.999
    assert fit.n_excluded == 0


def test_autonomy_fit_constant_trace_convention():
    steps = np.arange(0.0, 100.0, 5.0)
    fit = autonomy_fit(steps, np.full(steps.size, 2.5))
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.r2 == 1.0


def test_autonomy_fit_power_trace_beats_linear_trace():
    steps = np.arange(1.0, 1001.0, 10.0)
    power_fit = autonomy_fit(steps, 0.99**steps)
    linear_fit = autonomy_fit(steps, steps.copy())
    assert power_fit.r2 > linear_fit.r2


def test_autonomy_fit_excludes_nonpositive_points():
    steps = np.arange(0.0, 300.0, 10.0)
    trace = 0.98**steps
    trace[3] = 0.0
    trace[7] = -1.0
    trace[11] = float("nan")
    fit = autonomy_fit(steps, trace)
    assert fit.n_excluded == 3
    assert fit.n_points == steps.size - 3
    assert fit.r2 > 0.99


def test_autonomy_fit_needs_ten_valid_points():
    steps = np.arange(0.0, 90.0, 10.0)
    with pytest.raises(InsufficientSampleError):
        autonomy_fit(steps, 0.9**steps)  # only 9 points


def test_autonomy_fit_segment_restriction():
    steps = np.arange(0.0, 400.0, 10.0)
    trace = np.where(steps < 200, 1.0, 0.98 ** (steps - 200))
    full = autonomy_fit(steps, trace)
    tail = autonomy_fit(steps, trace, segment=(200.0, 400.0))
    assert tail.segment == (200.0, 400.0)
    assert tail.r2 > full.r2
    assert tail.slope == pytest.approx(math.log(0.98), abs=1e-3)


def test_autonomy_fit_r2_clamped_to_unit_interval():
    rng = np.random.default_rng(8)
    steps = np.arange(0.0, 200.0, 10.0)
    trace = np.exp(rng.normal(size=steps.size))  # pure noise
    fit = autonomy_fit(steps, trace)
    assert 0.0 <= fit.r2 <= 1.0


def test_autonomy_fit_json_dict_names_exclusions():
    steps = np.arange(0.0, 300.0, 10.0)
    fit = autonomy_fit(steps, 0.99**steps)
    d = fit.to_json_dict()
    assert set(d) >= {"slope", "intercept", "r2", "bp_pvalue", "segment",
                      "excluded_points"}


# -- stddev surface ----------------------------------------------------

@pytest.fixture(scope="module")
def surface_inputs():
    data = generate_linear(80, 4, noise_variance=1.0, seed=21)
    base = LoopConfig(setting=SETTING_SAMPLING, total_steps=120, usage_p=0.5,
                      adherence_s=1.0, seed=3, repeats=2)
    return data, base


def test_surface_shape_and_determinism(surface_inputs):
    data, base = surface_inputs
    p_grid, s_grid = (0.0, 1.0), (0.0, 1.0, 2.0)
    a = stddev_surface(data, p_grid, s_grid, base, workers=1)
    b = stddev_surface(data, p_grid, s_grid, base, workers=2)
    assert a.mean.shape == (2, 3)
    assert np.array_equal(a.mean, b.mean, equal_nan=True)
    assert a.errors == {} and b.errors == {}


def test_surface_zero_usage_rows_do_not_depend_on_s(surface_inputs):
    data, base = surface_inputs
    surf = stddev_surface(data, (0.0,), (0.0, 1.5, 3.0), base)
    row = surf.mean[0, :]
    assert np.allclose(row, row[0])


def test_surface_cell_accessor(surface_inputs):
    data, base = surface_inputs
    surf = stddev_surface(data, (0.0, 1.0), (0.0, 2.0), base)
    assert surf.cell(1.0, 2.0) == surf.mean[1, 1]
    with pytest.raises(KeyError):
        surf.cell(0.7, 2.0)


def test_surface_collects_cell_errors():
    # a window too small to fit a model: the cell must fail in isolation
    data = generate_linear(12, 40, noise_variance=1.0, seed=22)
    base = LoopConfig(setting=SETTING_SAMPLING, total_steps=5, usage_p=0.5,
                      adherence_s=1.0, seed=3, repeats=1)
    surf = stddev_surface(data, (0.0, 1.0), (0.0,), base)
    # every cell shares the degenerate dataset, so all fail; the sweep
    # itself must survive and report per-cell messages
    assert set(surf.errors) == {(0.0, 0.0), (1.0, 0.0)}
    assert np.all(np.isnan(surf.mean))
