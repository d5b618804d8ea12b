"""Statistical tests and fits over loop-run traces.

Covers the (usage, adherence) standard-deviation surface, residual
normality testing, the robust log-linear autonomy fit, and the
Breusch-Pagan homoscedasticity check on fit residuals.
"""

import numbers
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from loopsim.density import InsufficientSampleError
from loopsim.regressors import fit_huber_line


@dataclass
class DiagnosticsReport:
    """Aggregated per-probe time series of a repeated-learning run.

    Trace arrays hold the mean over repeats; the matching ``*_std`` arrays
    hold the across-repeat standard deviation. ``per_repeat`` keeps the
    raw (repeats x probes) matrices keyed by stat name ("psi", "stddev",
    "normality_p", "moment_l1", "moment_<k>", "mass@<kappa>").
    """

    probe_steps: list
    psi_trace: np.ndarray
    psi_trace_std: np.ndarray
    stddev_trace: np.ndarray
    stddev_trace_std: np.ndarray
    interval_masses: dict
    interval_masses_std: dict
    moment_traces: dict
    moment_traces_std: dict
    moment_l1_trace: np.ndarray
    moment_l1_trace_std: np.ndarray
    normality_pvalues: np.ndarray
    normality_pvalues_std: np.ndarray
    kappa_list: list
    config_echo: object
    repeats_aggregated: int
    spike_counts: np.ndarray = None
    per_repeat: dict = field(default_factory=dict)
    step_traces: list = None

    def __post_init__(self):
        n = len(self.probe_steps)
        for name in ("psi_trace", "stddev_trace", "moment_l1_trace", "normality_pvalues"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match probe_steps")
        pv = self.normality_pvalues
        pv = pv[np.isfinite(pv)]
        if pv.size and (pv.min() < 0 or pv.max() > 1):
            raise ValueError("p-values must lie in [0, 1]")


@dataclass(frozen=True)
class AutonomyFit:
    """Robust log-linear fit of a point-density trace.

    r2 is the coefficient of determination of the robust line against the
    log-density data; bp_pvalue is the Breusch-Pagan p-value on the fit
    residuals; n_excluded counts nonpositive or degenerate trace entries
    dropped before taking logs.
    """

    slope: float
    intercept: float
    r2: float
    bp_pvalue: float
    segment: tuple
    n_points: int
    n_excluded: int

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "bp_pvalue": self.bp_pvalue,
            "segment": list(self.segment),
            "n_points": self.n_points,
            "excluded_points": self.n_excluded,
        }


def normality_test(sample) -> tuple[float, float]:
    """D'Agostino-Pearson omnibus normality test.

    Combines the skewness and kurtosis normal transforms into a K^2
    statistic referred to chi-square with 2 degrees of freedom. Needs at
    least 20 points for the transforms to be calibrated.
    """
    arr = np.asarray(sample, dtype=float)
    if arr.ndim != 1 or arr.size < 20:
        raise InsufficientSampleError(f"normality test needs >= 20 points, got {arr.size}")
    statistic, pvalue = stats.normaltest(arr)
    return float(statistic), float(pvalue)


def breusch_pagan(residuals, regressor) -> float:
    """Breusch-Pagan LM test for homoscedasticity against one regressor.

    Auxiliary OLS of squared residuals on the regressor; LM = n * R^2 of
    that regression, referred to chi-square with 1 degree of freedom.
    Degenerate cases (all-zero residuals, or squared residuals that carry
    no variance) are perfectly homoscedastic by convention: p = 1.
    """
    e = np.asarray(residuals, dtype=float)
    x = np.asarray(regressor, dtype=float)
    if e.shape != x.shape or e.ndim != 1:
        raise ValueError("residuals and regressor must be equal-length 1-d sequences")
    n = e.size
    if n < 10:
        raise ValueError(f"need at least 10 observations, got {n}")
    if np.ptp(x) == 0:
        raise ValueError("constant regressor: auxiliary regression undefined")
    e2 = e * e
    ss_tot = float(np.sum((e2 - e2.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0
    slope, intercept = np.polyfit(x, e2, 1)
    resid_aux = e2 - (slope * x + intercept)
    r2_aux = 1.0 - float(np.sum(resid_aux**2)) / ss_tot
    lm = n * r2_aux
    return float(stats.chi2.sf(lm, df=1))


def autonomy_fit(steps, psi_values, segment=None, delta: float = 1.35) -> AutonomyFit:
    """Fit ln(density trace) against step with a robust line.

    A trace that follows a power sequence is a straight line in log
    space; the r2 of the robust fit measures how close the run is to
    that. Nonpositive and degenerate (non-finite or spike) values cannot
    enter the log and are excluded with a count.
    """
    t_all = np.asarray(steps, dtype=float)
    raw = list(psi_values)
    if t_all.size != len(raw):
        raise ValueError("steps and psi_values must have equal length")
    if segment is None:
        segment = (float(t_all.min()), float(t_all.max()))
    lo, hi = segment
    t_list, v_list, n_excluded = [], [], []
    excluded = 0
    for t, v in zip(t_all, raw):
        if not (lo <= t <= hi):
            continue
        if not isinstance(v, numbers.Real) or not np.isfinite(v) or v <= 0:
            excluded += 1
            continue
        t_list.append(t)
        v_list.append(float(v))
    if len(t_list) < 10:
        raise InsufficientSampleError(
            f"autonomy fit needs >= 10 valid points inside the segment, got {len(t_list)} "
            f"({excluded} excluded)"
        )
    t = np.asarray(t_list)
    log_v = np.log(np.asarray(v_list))
    line = fit_huber_line(t, log_v, delta=delta)
    slope = float(line.weights[0])
    intercept = line.intercept
    fitted = slope * t + intercept
    resid = log_v - fitted
    ss_tot = float(np.sum((log_v - log_v.mean()) ** 2))
    # zero-variance convention: a constant trace is a perfect flat fit; the
    # mean subtraction leaves O(eps) dust even on bit-identical values, so
    # compare against a scale-aware floor instead of exact zero
    scale = max(1.0, float(np.max(np.abs(log_v))))
    floor = log_v.size * (4.0 * np.finfo(float).eps * scale) ** 2
    if ss_tot <= floor:
        r2 = 1.0
        resid = np.zeros_like(resid)
    else:
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot
    # the robust line can undershoot the mean fit on outlier-heavy traces;
    # the report keeps r2 inside [0, 1]
    r2 = min(1.0, max(0.0, r2))
    bp = breusch_pagan(resid, t)
    return AutonomyFit(slope, intercept, r2, bp, (lo, hi), len(t_list), excluded)


@dataclass
class SurfaceResult:
    """Final residual standard deviation over a (usage, adherence) grid."""

    p_grid: list
    s_grid: list
    mean: np.ndarray
    std: np.ndarray
    errors: dict

    def cell(self, p: float, s: float) -> float:
        try:
            i, j = self.p_grid.index(p), self.s_grid.index(s)
        except ValueError as exc:
            raise KeyError(f"({p}, {s}) is not a grid point") from exc
        return float(self.mean[i, j])


def stddev_surface(data, p_grid, s_grid, config, workers: int = 1) -> SurfaceResult:
    """Run the loop over a (usage, adherence) grid.

    Each cell executes ``config.repeats`` independent runs probed only at
    step 0 and the final step; the cell value is the mean final-probe
    residual standard deviation, with the across-repeat deviation kept
    alongside. A failing cell records its error and leaves NaN in the
    matrices instead of aborting the sweep.
    """
    from loopsim import engine

    p_grid = list(p_grid)
    s_grid = list(s_grid)
    if not p_grid or not s_grid:
        raise ValueError("grids must be nonempty")
    mean = np.full((len(p_grid), len(s_grid)), np.nan)
    std = np.full((len(p_grid), len(s_grid)), np.nan)
    errors = {}

    cells = [(i, j) for i in range(len(p_grid)) for j in range(len(s_grid))]

    def run_cell(idx):
        i, j = idx
        cell_config = engine.replace_config(config, usage_p=p_grid[i], adherence_s=s_grid[j])
        report = engine.run(data, cell_config, probes=(), workers=1)
        final = report.per_repeat["stddev"][:, -1]
        return float(np.mean(final)), float(np.std(final))

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {idx: pool.submit(_surface_cell, data, config, p_grid[idx[0]], s_grid[idx[1]]) for idx in cells}
            for idx in cells:
                try:
                    mean[idx], std[idx] = futures[idx].result()
                except Exception as exc:
                    errors[idx] = str(exc)
    else:
        for idx in cells:
            try:
                mean[idx], std[idx] = run_cell(idx)
            except Exception as exc:
                errors[idx] = str(exc)
    return SurfaceResult(p_grid, s_grid, mean, std, errors)


def _surface_cell(data, config, p, s):
    # module-level for pickling into worker processes
    from loopsim import engine

    cell_config = engine.replace_config(config, usage_p=p, adherence_s=s)
    report = engine.run(data, cell_config, probes=(), workers=1)
    final = report.per_repeat["stddev"][:, -1]
    return float(np.mean(final)), float(np.std(final))
