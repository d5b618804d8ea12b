"""Repeated-learning loop over a fixed regression dataset.

A model is trained on an active set, its predictions replace targets with
probability ``usage_p`` (noised by adherence ``s`` times the holdout MSE),
and the model is refit on a schedule. Two update protocols are supported:

* ``sliding_window``: the active set is a fixed-size FIFO window; each step
  consumes one fresh item from a permuted reserve and evicts the oldest
  active item. The process ends when the reserve runs out.
* ``sampling_update``: the active set is the whole dataset; each step draws
  one item uniformly and overwrites its target in place.

``run`` executes several independent repeats and aggregates per-probe
residual statistics into a DiagnosticsReport.
"""

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from loopsim.data import Dataset
from loopsim.density import SPIKE, EmpiricalDistribution, SaturationError
from loopsim.diagnostics import DiagnosticsReport, normality_test
from loopsim.regressors import (
    DEFAULT_RIDGE_PENALTY,
    SOLVER_RIDGE_EXACT,
    SOLVER_RIDGE_REGULARIZED,
    SOLVER_SGD,
    TrainedModel,
    fit_ridge,
    fit_sgd,
    mse,
    predict,
)

SETTING_SLIDING = "sliding_window"
SETTING_SAMPLING = "sampling_update"

DEFAULT_WINDOW_FRACTION = {SETTING_SLIDING: 0.3, SETTING_SAMPLING: 1.0}
DEFAULT_PROBE_EVERY = {SETTING_SLIDING: 10, SETTING_SAMPLING: 100}
DEFAULT_KAPPA_FRACTIONS = (0.05, 0.1, 0.25, 0.5)
DEFAULT_MOMENT_ORDERS = (1, 2, 3, 4, 5, 6)
DEFAULT_MOMENT_L1_TERMS = 300

_MODELS = (SOLVER_SGD, SOLVER_RIDGE_EXACT, SOLVER_RIDGE_REGULARIZED)


class LoopComplete(Exception):
    """Signals that a sliding-window reserve has been fully consumed."""


@dataclass(frozen=True)
class LoopConfig:
    """Immutable description of one loop experiment.

    usage_p is the probability a prediction replaces the true target;
    adherence_s scales the sampling variance around the prediction
    (targets are drawn from N(prediction, s * holdout MSE)). The model is
    refit every retrain_period steps on a train_fraction split of the
    active set, with the MSE taken on the trailing holdout_fraction.
    """

    setting: str
    total_steps: int
    usage_p: float
    adherence_s: float
    retrain_period: int = 20
    window_fraction: float | None = None
    model: str = SOLVER_RIDGE_EXACT
    regularization: float = DEFAULT_RIDGE_PENALTY
    sgd_iterations: int = 50
    train_fraction: float = 0.8
    holdout_fraction: float = 0.3
    seed: int = 0
    repeats: int = 10
    probe_every: int | None = None

    def __post_init__(self):
        if self.setting not in (SETTING_SLIDING, SETTING_SAMPLING):
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.model not in _MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if not 0.0 <= self.usage_p <= 1.0:
            raise ValueError(f"usage_p must lie in [0, 1], got {self.usage_p}")
        if self.adherence_s < 0.0:
            raise ValueError(f"adherence_s must be nonnegative, got {self.adherence_s}")
        for name in ("total_steps", "retrain_period", "sgd_iterations", "repeats"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.window_fraction is not None and not 0.0 < self.window_fraction <= 1.0:
            raise ValueError(f"window_fraction must lie in (0, 1], got {self.window_fraction}")
        if self.setting == SETTING_SAMPLING and self.window_fraction not in (None, 1.0):
            raise ValueError("sampling_update always works on the full data set")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError(f"holdout_fraction must lie in (0, 1), got {self.holdout_fraction}")
        if self.regularization < 0.0:
            raise ValueError(f"regularization must be nonnegative, got {self.regularization}")
        if self.probe_every is not None and int(self.probe_every) < 1:
            raise ValueError("probe_every must be a positive integer")

    @property
    def resolved_window_fraction(self) -> float:
        if self.window_fraction is None:
            return DEFAULT_WINDOW_FRACTION[self.setting]
        return self.window_fraction

    @property
    def resolved_probe_every(self) -> int:
        if self.probe_every is None:
            return DEFAULT_PROBE_EVERY[self.setting]
        return int(self.probe_every)

    def window_size(self, n_rows: int) -> int:
        # tiny nudge so fractions stored just below a round binary value
        # (0.3 * 10, 0.3 * 2000, ...) still floor to the intended size
        return int(math.floor(self.resolved_window_fraction * n_rows + 1e-9))


def replace_config(config: LoopConfig, **changes) -> LoopConfig:
    """Copy a config with fields replaced; revalidates the result."""
    return dataclasses.replace(config, **changes)


@dataclass(frozen=True)
class StepTrace:
    """Record of a single loop step."""

    step_t: int
    item_index: int
    y_true: float
    y_pred: float
    z_sampled: float
    used_prediction: bool
    residual: float


@dataclass
class LoopState:
    """Mutable state of one run: active set, reserve, model, counters.

    For sliding windows the active arrays form a ring whose oldest slot is
    ring_pos; the reserve arrays hold the not-yet-consumed items in the
    (already permuted) order they will be drawn.
    """

    features: np.ndarray
    targets: np.ndarray
    item_indices: np.ndarray
    reserve_features: np.ndarray
    reserve_targets: np.ndarray
    reserve_indices: np.ndarray
    reserve_pos: int
    ring_pos: int
    step_t: int
    round_r: int
    model: TrainedModel | None
    sigma2: float
    replaced_count: int
    rng: np.random.Generator

    @property
    def window_size(self) -> int:
        return int(self.targets.size)

    @property
    def reserve_remaining(self) -> int:
        return int(self.reserve_targets.size - self.reserve_pos)

    def residuals(self) -> np.ndarray:
        return self.targets - predict(self.model, self.features)


def _fit_model(config: LoopConfig, features, targets, rng) -> TrainedModel:
    if config.model == SOLVER_SGD:
        seed = int(rng.integers(0, 2**63 - 1))
        return fit_sgd(features, targets, max_iterations=config.sgd_iterations, seed=seed)
    if config.model == SOLVER_RIDGE_EXACT:
        return fit_ridge(features, targets, regularization=0.0)
    return fit_ridge(features, targets, regularization=config.regularization)


def _retrain(state: LoopState, config: LoopConfig) -> None:
    w = state.window_size
    order = state.rng.permutation(w)
    n_train = max(2, int(config.train_fraction * w + 1e-9))
    n_hold = max(1, int(config.holdout_fraction * w + 1e-9))
    train = order[:n_train]
    hold = order[w - n_hold :]
    state.model = _fit_model(config, state.features[train], state.targets[train], state.rng)
    state.sigma2 = mse(state.model, state.features[hold], state.targets[hold])


def init_sliding(data: Dataset, config: LoopConfig, rng=None) -> LoopState:
    """Set up a sliding-window run: sample the window, permute the reserve.

    When rng is omitted it is seeded from config.seed. total_steps must fit
    inside the reserve (the window itself never shrinks or grows).
    """
    if config.setting != SETTING_SLIDING:
        raise ValueError(f"config setting is {config.setting!r}, expected {SETTING_SLIDING!r}")
    m = data.n_rows
    if m < 10:
        raise ValueError(f"sliding window needs at least 10 rows, got {m}")
    w = config.window_size(m)
    if w < 3:
        raise ValueError(f"window of {w} items cannot support the retrain split")
    reserve_size = m - w
    if config.total_steps > reserve_size:
        raise ValueError(
            f"total_steps {config.total_steps} exceeds the reserve of {reserve_size} items"
        )
    if rng is None:
        rng = np.random.default_rng(config.seed)
    order = rng.permutation(m)
    active = order[:w]
    reserve = order[w:]
    state = LoopState(
        features=data.features[active].copy(),
        targets=data.targets[active].copy(),
        item_indices=active.copy(),
        reserve_features=data.features[reserve].copy(),
        reserve_targets=data.targets[reserve].copy(),
        reserve_indices=reserve.copy(),
        reserve_pos=0,
        ring_pos=0,
        step_t=0,
        round_r=0,
        model=None,
        sigma2=0.0,
        replaced_count=0,
        rng=rng,
    )
    _retrain(state, config)
    return state


def init_sampling(data: Dataset, config: LoopConfig, rng=None) -> LoopState:
    """Set up a sampling-update run over the full dataset."""
    if config.setting != SETTING_SAMPLING:
        raise ValueError(f"config setting is {config.setting!r}, expected {SETTING_SAMPLING!r}")
    m = data.n_rows
    if m < 2:
        raise ValueError(f"sampling updates need at least 2 rows, got {m}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    empty_f = np.empty((0, data.n_features))
    empty_t = np.empty(0)
    state = LoopState(
        features=data.features.copy(),
        targets=data.targets.copy(),
        item_indices=np.arange(m),
        reserve_features=empty_f,
        reserve_targets=empty_t,
        reserve_indices=np.empty(0, dtype=int),
        reserve_pos=0,
        ring_pos=0,
        step_t=0,
        round_r=0,
        model=None,
        sigma2=0.0,
        replaced_count=0,
        rng=rng,
    )
    _retrain(state, config)
    return state


def init_state(data: Dataset, config: LoopConfig, rng=None) -> LoopState:
    """Dispatch to the initializer matching config.setting."""
    if config.setting == SETTING_SLIDING:
        return init_sliding(data, config, rng=rng)
    return init_sampling(data, config, rng=rng)


def step(state: LoopState, config: LoopConfig) -> StepTrace:
    """Advance the loop by one item; retrains when the schedule says so.

    Raises LoopComplete once a sliding-window reserve is exhausted. The
    returned trace records the drawn item, the prediction, the sampled
    replacement value, and whether it was used.
    """
    rng = state.rng
    sliding = config.setting == SETTING_SLIDING
    if sliding:
        if state.reserve_pos >= state.reserve_targets.size:
            raise LoopComplete(f"reserve exhausted after {state.step_t} steps")
        pos = state.reserve_pos
        x = state.reserve_features[pos]
        y_true = float(state.reserve_targets[pos])
        item = int(state.reserve_indices[pos])
        slot = state.ring_pos
    else:
        slot = int(rng.integers(state.window_size))
        x = state.features[slot]
        y_true = float(state.targets[slot])
        item = int(state.item_indices[slot])
    y_pred = float(predict(state.model, x.reshape(1, -1))[0])
    z = float(rng.normal(y_pred, math.sqrt(config.adherence_s * state.sigma2)))
    used = bool(rng.random() < config.usage_p)
    new_target = z if used else y_true
    if sliding:
        state.features[slot] = x
        state.targets[slot] = new_target
        state.item_indices[slot] = item
        state.ring_pos = (slot + 1) % state.window_size
        state.reserve_pos += 1
    else:
        state.targets[slot] = new_target
    if used:
        state.replaced_count += 1
    state.step_t += 1
    state.round_r = state.step_t // config.retrain_period
    if state.step_t % config.retrain_period == 0:
        _retrain(state, config)
    return StepTrace(state.step_t, item, y_true, y_pred, z, used, y_true - y_pred)


def _resolve_probes(config: LoopConfig, probes) -> list[int]:
    budget = config.total_steps
    if probes is None:
        every = config.resolved_probe_every
        chosen = set(range(0, budget + 1, every))
    else:
        chosen = {int(t) for t in probes}
        bad = [t for t in chosen if t < 0 or t > budget]
        if bad:
            raise ValueError(f"probe steps {sorted(bad)} fall outside [0, {budget}]")
    chosen.update((0, budget))
    return sorted(chosen)


def _observe(state, dist_kappas, moment_orders, l1_terms):
    """Compute one probe's residual statistics from the current state."""
    resid = state.residuals()
    dist = EmpiricalDistribution(resid)
    lo = float(dist.sample[0])
    hi = float(dist.sample[-1])
    if dist.ecdf(lo - 1.0) != 0.0 or dist.ecdf(hi) != 1.0:
        raise RuntimeError("probe ECDF failed the normalization check")
    out = {}
    d0 = dist.density_at(0.0)
    if d0 is SPIKE:
        out["psi"] = np.nan
        out["spike"] = 1.0
    else:
        out["psi"] = float(d0)
        out["spike"] = 0.0
    out["stddev"] = float(np.std(resid))
    out["mass"] = np.array([dist.interval_mass(k) for k in dist_kappas])
    moments = np.full(len(moment_orders), np.nan)
    for i, order in enumerate(moment_orders):
        try:
            moments[i] = dist.raw_moment(order)
        except SaturationError:
            pass
    out["moments"] = moments
    l1 = dist.moment_l1_sum(l1_terms)
    out["moment_l1"] = l1.value
    out["moment_l1_truncated"] = 0.0 if l1.truncated_at is None else 1.0
    if dist.n >= 20 and np.ptp(resid) > 0:
        out["normality_p"] = normality_test(resid)[1]
    else:
        out["normality_p"] = np.nan
    return out


def _run_repeat(data, config, child_seed, probe_steps, kappas, moment_orders, l1_terms, collect):
    rng = np.random.default_rng(child_seed)
    state = init_state(data, config, rng=rng)
    n_probes = len(probe_steps)
    res = {
        "psi": np.full(n_probes, np.nan),
        "spike": np.zeros(n_probes),
        "stddev": np.full(n_probes, np.nan),
        "mass": np.full((len(kappas), n_probes), np.nan),
        "moments": np.full((len(moment_orders), n_probes), np.nan),
        "moment_l1": np.full(n_probes, np.nan),
        "moment_l1_truncated": np.zeros(n_probes),
        "normality_p": np.full(n_probes, np.nan),
    }
    traces = [] if collect else None
    lookup = {t: i for i, t in enumerate(probe_steps)}

    def record(t):
        i = lookup[t]
        obs = _observe(state, kappas, moment_orders, l1_terms)
        res["psi"][i] = obs["psi"]
        res["spike"][i] = obs["spike"]
        res["stddev"][i] = obs["stddev"]
        res["mass"][:, i] = obs["mass"]
        res["moments"][:, i] = obs["moments"]
        res["moment_l1"][i] = obs["moment_l1"]
        res["moment_l1_truncated"][i] = obs["moment_l1_truncated"]
        res["normality_p"][i] = obs["normality_p"]

    if 0 in lookup:
        record(0)
    for t in range(1, config.total_steps + 1):
        trace = step(state, config)
        if collect:
            traces.append(trace)
        if t in lookup:
            record(t)
    res["traces"] = traces
    return res


def _run_repeat_star(args):
    return _run_repeat(*args)


def derive_kappas(data: Dataset, config: LoopConfig) -> list[float]:
    """Default probe half-widths: fractions of the initial residual spread.

    Uses a throwaway initialization with the first repeat's child seed, so
    the values are deterministic for a given (data, config) pair. Falls
    back to the bare fractions if the initial fit is exact.
    """
    child = np.random.SeedSequence(config.seed).spawn(1)[0]
    state = init_state(data, config, rng=np.random.default_rng(child))
    sd0 = float(np.std(state.residuals()))
    if sd0 > 0 and math.isfinite(sd0):
        return [f * sd0 for f in DEFAULT_KAPPA_FRACTIONS]
    return list(DEFAULT_KAPPA_FRACTIONS)


def run(
    data: Dataset,
    config: LoopConfig,
    probes=None,
    kappa_list=None,
    moment_orders=DEFAULT_MOMENT_ORDERS,
    moment_l1_terms=DEFAULT_MOMENT_L1_TERMS,
    collect_traces: bool = False,
    workers: int = 1,
) -> DiagnosticsReport:
    """Execute config.repeats independent runs and aggregate probe stats.

    Repeat seeds are spawned from config.seed, so results are reproducible
    and independent of workers. probes=None uses the default schedule for
    the setting; an explicit sequence is used as-is (step 0 and the final
    step are always included). kappa_list=None derives interval
    half-widths from the initial residual spread.
    """
    probe_steps = _resolve_probes(config, probes)
    kappas = list(kappa_list) if kappa_list is not None else derive_kappas(data, config)
    if any(k <= 0 for k in kappas):
        raise ValueError("interval half-widths must be positive")
    orders = [int(k) for k in moment_orders]
    children = np.random.SeedSequence(config.seed).spawn(config.repeats)
    arg_list = [
        (data, config, children[r], probe_steps, kappas, orders, moment_l1_terms, collect_traces)
        for r in range(config.repeats)
    ]
    if workers > 1 and config.repeats > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_repeat_star, arg_list))
    else:
        results = [_run_repeat(*args) for args in arg_list]

    def stack(key):
        return np.stack([r[key] for r in results])

    per_repeat = {
        "psi": stack("psi"),
        "stddev": stack("stddev"),
        "normality_p": stack("normality_p"),
        "moment_l1": stack("moment_l1"),
        "moment_l1_truncated": stack("moment_l1_truncated"),
    }
    mass_cube = stack("mass")
    moment_cube = stack("moments")
    for i, kap in enumerate(kappas):
        per_repeat[f"mass@{kap:.10g}"] = mass_cube[:, i, :]
    for i, order in enumerate(orders):
        per_repeat[f"moment_{order}"] = moment_cube[:, i, :]

    with warnings.catch_warnings():
        # all-spike probes leave empty slices behind; NaN is the answer there
        warnings.simplefilter("ignore", category=RuntimeWarning)
        psi_mean = np.nanmean(per_repeat["psi"], axis=0)
        psi_std = np.nanstd(per_repeat["psi"], axis=0)
        masses = {kap: np.nanmean(mass_cube[:, i, :], axis=0) for i, kap in enumerate(kappas)}
        masses_std = {kap: np.nanstd(mass_cube[:, i, :], axis=0) for i, kap in enumerate(kappas)}
        moments = {k: np.nanmean(moment_cube[:, i, :], axis=0) for i, k in enumerate(orders)}
        moments_std = {k: np.nanstd(moment_cube[:, i, :], axis=0) for i, k in enumerate(orders)}
        report = DiagnosticsReport(
            probe_steps=list(probe_steps),
            psi_trace=psi_mean,
            psi_trace_std=psi_std,
            stddev_trace=np.nanmean(per_repeat["stddev"], axis=0),
            stddev_trace_std=np.nanstd(per_repeat["stddev"], axis=0),
            interval_masses=masses,
            interval_masses_std=masses_std,
            moment_traces=moments,
            moment_traces_std=moments_std,
            moment_l1_trace=np.nanmean(per_repeat["moment_l1"], axis=0),
            moment_l1_trace_std=np.nanstd(per_repeat["moment_l1"], axis=0),
            normality_pvalues=np.nanmean(per_repeat["normality_p"], axis=0),
            normality_pvalues_std=np.nanstd(per_repeat["normality_p"], axis=0),
            kappa_list=kappas,
            config_echo=config,
            repeats_aggregated=config.repeats,
            spike_counts=np.sum(stack("spike"), axis=0),
            per_repeat=per_repeat,
            step_traces=[r["traces"] for r in results] if collect_traces else None,
        )
    return report
