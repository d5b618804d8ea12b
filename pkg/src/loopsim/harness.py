"""Experiment orchestration and persistent, reproducible outputs.

Configuration is a flat key=value text file plus overrides; every run
resolves to a canonical flat form that is written next to the outputs,
hashed, and recorded in a manifest together with content hashes of every
emitted file. Re-running from a manifest reproduces the CSVs byte for
byte (timestamps live only in the manifest, which is never hashed).
"""

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import loopsim
from loopsim.analytic import (
    AnalyticMap,
    autonomy_check,
    envelope_norm,
    gaussian_density,
    linear_sequence,
    power_sequence,
    triangle_test_function,
    weak_limit_probe,
)
from loopsim.data import (
    RNG_ALGORITHM,
    Dataset,
    generate_friedman1,
    generate_linear,
    read_dataset,
    write_dataset,
)
from loopsim.diagnostics import autonomy_fit, stddev_surface
from loopsim.engine import (
    SETTING_SAMPLING,
    SETTING_SLIDING,
    LoopConfig,
    run,
)

EXPERIMENTS = ("sweep", "density_trace", "normality", "autonomy", "moments", "analytic_demo")
GENERATOR_KINDS = ("linear", "friedman1")
SETTING_ALIASES = {
    "sampling": SETTING_SAMPLING,
    "sampling_update": SETTING_SAMPLING,
    "sliding": SETTING_SLIDING,
    "sliding_window": SETTING_SLIDING,
}

FLOAT_FORMAT = "%.17g"


class ConfigError(ValueError):
    """Invalid or unknown configuration; maps to exit code 2."""


class IntegrityError(RuntimeError):
    """A manifest's recorded hash does not match the file on disk."""


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment description; every field has a canonical string form."""

    experiment: str
    dataset: str = ""
    kind: str = "linear"
    rows: int = 2000
    cols: int = 10
    noise: float = 1.0
    data_seed: int = 7
    setting: str = SETTING_SAMPLING
    usage: float = 1.0
    adherence: float = 0.0
    steps: int = 1000
    retrain_period: int = 20
    window_fraction: float | None = None
    model: str = "ridge_exact"
    regularization: float = 0.1
    sgd_iterations: int = 50
    train_fraction: float = 0.8
    holdout_fraction: float = 0.3
    seed: int = 0
    repeats: int = 10
    probe_every: int | None = None
    probes: tuple | None = None
    kappas: tuple | None = None
    usage_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    adherence_grid: tuple = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    segment: tuple | None = None
    psi: str = "power:2"
    demo_variance: float = 25.0
    t_list: tuple = (1, 2, 5, 10, 20, 50, 100)
    out_dir: str = ""
    workers: int = 0
    collect_traces: bool = False

    def to_flat_dict(self) -> dict:
        """Canonical flat key=value view; parsing it back is the identity."""
        out = {
            "experiment": self.experiment,
            "dataset": self.dataset,
            "kind": self.kind,
            "rows": str(self.rows),
            "cols": str(self.cols),
            "noise": repr(self.noise),
            "data_seed": str(self.data_seed),
            "setting": self.setting,
            "usage": repr(self.usage),
            "adherence": repr(self.adherence),
            "steps": str(self.steps),
            "retrain_period": str(self.retrain_period),
            "window_fraction": "" if self.window_fraction is None else repr(self.window_fraction),
            "model": self.model,
            "regularization": repr(self.regularization),
            "sgd_iterations": str(self.sgd_iterations),
            "train_fraction": repr(self.train_fraction),
            "holdout_fraction": repr(self.holdout_fraction),
            "seed": str(self.seed),
            "repeats": str(self.repeats),
            "probe_every": "" if self.probe_every is None else str(self.probe_every),
            "probes": "" if self.probes is None else ",".join(str(t) for t in self.probes),
            "kappas": "" if self.kappas is None else ",".join(repr(k) for k in self.kappas),
            "usage_grid": ",".join(repr(v) for v in self.usage_grid),
            "adherence_grid": ",".join(repr(v) for v in self.adherence_grid),
            "segment": "" if self.segment is None else f"{self.segment[0]!r}:{self.segment[1]!r}",
            "psi": self.psi,
            "demo_variance": repr(self.demo_variance),
            "t_list": ",".join(str(t) for t in self.t_list),
            "out_dir": self.out_dir,
            "workers": str(self.workers),
            "collect_traces": "true" if self.collect_traces else "false",
        }
        return out

    def loop_config(self) -> LoopConfig:
        return LoopConfig(
            setting=self.setting,
            total_steps=self.steps,
            usage_p=self.usage,
            adherence_s=self.adherence,
            retrain_period=self.retrain_period,
            window_fraction=self.window_fraction,
            model=self.model,
            regularization=self.regularization,
            sgd_iterations=self.sgd_iterations,
            train_fraction=self.train_fraction,
            holdout_fraction=self.holdout_fraction,
            seed=self.seed,
            repeats=self.repeats,
            probe_every=self.probe_every,
        )

    def resolved_out_dir(self) -> Path:
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get("LOOPSIM_OUT", "loopsim_out"))

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get("LOOPSIM_WORKERS", "")
        if env.strip():
            try:
                value = int(env)
            except ValueError as exc:
                raise ConfigError(f"LOOPSIM_WORKERS must be an integer, got {env!r}") from exc
            if value > 0:
                return value
        return os.cpu_count() or 1


def parse_config_file(path) -> dict:
    """Read a flat key=value file; '#' starts a comment, blanks are skipped."""
    raw = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def _cast_int(key, value):
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from exc


def _cast_float(key, value):
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {value!r}") from exc


def _cast_bool(key, value):
    low = value.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key} must be true or false, got {value!r}")


def _parse_grid(key, value) -> tuple:
    """A grid is 'start:stop:step' (inclusive), a comma list, or one number."""
    text = value.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key} range must be start:stop:step, got {value!r}")
        start, stop, step = (_cast_float(key, p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"{key} range needs step > 0 and stop >= start, got {value!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    if "," in text:
        return tuple(_cast_float(key, p) for p in text.split(",") if p.strip())
    return (_cast_float(key, text),)


def _parse_int_list(key, value) -> tuple:
    try:
        return tuple(int(p) for p in value.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list of integers, got {value!r}") from exc


def _parse_float_list(key, value) -> tuple:
    try:
        return tuple(float(p) for p in value.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list of numbers, got {value!r}") from exc


def _parse_segment(key, value) -> tuple:
    parts = value.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{key} must be lo:hi, got {value!r}")
    lo, hi = (_cast_float(key, p) for p in parts)
    if hi <= lo:
        raise ConfigError(f"{key} needs hi > lo, got {value!r}")
    return (lo, hi)


_CASTERS = {
    "experiment": lambda k, v: v,
    "dataset": lambda k, v: v,
    "kind": lambda k, v: v,
    "rows": _cast_int,
    "cols": _cast_int,
    "noise": _cast_float,
    "data_seed": _cast_int,
    "setting": lambda k, v: v,
    "usage": _cast_float,
    "adherence": _cast_float,
    "steps": _cast_int,
    "retrain_period": _cast_int,
    "window_fraction": _cast_float,
    "model": lambda k, v: v,
    "regularization": _cast_float,
    "sgd_iterations": _cast_int,
    "train_fraction": _cast_float,
    "holdout_fraction": _cast_float,
    "seed": _cast_int,
    "repeats": _cast_int,
    "probe_every": _cast_int,
    "probes": _parse_int_list,
    "kappas": _parse_float_list,
    "usage_grid": _parse_grid,
    "adherence_grid": _parse_grid,
    "segment": _parse_segment,
    "psi": lambda k, v: v,
    "demo_variance": _cast_float,
    "t_list": _parse_int_list,
    "out_dir": lambda k, v: v,
    "workers": _cast_int,
    "collect_traces": _cast_bool,
}

# keys whose empty string means "unset"
_OPTIONAL_KEYS = ("window_fraction", "probe_every", "probes", "kappas", "segment")


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a flat string mapping and produce an ExperimentConfig.

    Unknown keys are rejected outright. Loop parameters are checked here,
    before anything runs, by constructing the engine config.
    """
    unknown = sorted(set(raw) - set(_CASTERS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "experiment" not in raw or not raw["experiment"].strip():
        raise ConfigError("missing required key: experiment")
    values = {}
    for key, text in raw.items():
        text = text.strip() if isinstance(text, str) else text
        if text == "" and (key in _OPTIONAL_KEYS or key in ("dataset", "out_dir")):
            continue
        if text == "":
            raise ConfigError(f"{key} has an empty value")
        values[key] = _CASTERS[key](key, text) if isinstance(text, str) else text
    experiment = values.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    setting = values.get("setting", SETTING_SAMPLING)
    if setting not in SETTING_ALIASES:
        raise ConfigError(f"setting must be one of {sorted(set(SETTING_ALIASES))}, got {setting!r}")
    values["setting"] = SETTING_ALIASES[setting]
    kind = values.get("kind", "linear")
    if kind not in GENERATOR_KINDS:
        raise ConfigError(f"kind must be one of {GENERATOR_KINDS}, got {kind!r}")
    try:
        config = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if experiment != "analytic_demo":
        try:
            config.loop_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not config.dataset:
            if config.rows < 2 or config.cols < 1:
                raise ConfigError("rows must be >= 2 and cols >= 1")
            if kind == "friedman1" and config.cols < 5:
                raise ConfigError("friedman1 needs cols >= 5")
            if config.noise < 0:
                raise ConfigError("noise must be nonnegative")
    else:
        _parse_psi(config.psi)
        if config.demo_variance <= 0:
            raise ConfigError("demo_variance must be positive")
        if not config.t_list or any(t < 1 for t in config.t_list):
            raise ConfigError("t_list must contain positive step indices")
    if config.segment is not None and experiment not in ("autonomy",):
        raise ConfigError("segment only applies to the autonomy experiment")
    return config


def config_hash(config: ExperimentConfig) -> str:
    """Hash of the canonical config, ignoring where and how wide it runs."""
    flat = config.to_flat_dict()
    for key in ("out_dir", "workers"):
        flat.pop(key, None)
    blob = "\n".join(f"{k}={flat[k]}" for k in sorted(flat))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _parse_psi(value: str):
    """'power:<a>' or 'linear' into a scaling sequence."""
    text = value.strip()
    if text == "linear":
        return linear_sequence()
    if text.startswith("power:"):
        try:
            a = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"psi power base must be a number, got {value!r}") from exc
        if a <= 0:
            raise ConfigError(f"psi power base must be positive, got {a}")
        return power_sequence(a)
    raise ConfigError(f"psi must be 'linear' or 'power:<base>', got {value!r}")


# ---------------------------------------------------------------------------
# output writers


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _trace_rows(report):
    """Long-format rows (step, repeat, stat_name, value), deterministic order."""
    steps = report.probe_steps
    names = sorted(report.per_repeat)
    for repeat in range(report.repeats_aggregated):
        for i, step_t in enumerate(steps):
            for name in names:
                value = report.per_repeat[name][repeat, i]
                yield (str(step_t), str(repeat), name, _fmt(value))


def write_trace_csv(path: Path, report) -> None:
    _write_csv(path, ["step", "repeat", "stat_name", "value"], _trace_rows(report))


def write_steps_csv(path: Path, report) -> None:
    header = ["repeat", "step", "item_index", "y_true", "y_pred", "z_sampled",
              "used_prediction", "residual"]

    def rows():
        for repeat, traces in enumerate(report.step_traces):
            for tr in traces:
                yield (
                    str(repeat), str(tr.step_t), str(tr.item_index), _fmt(tr.y_true),
                    _fmt(tr.y_pred), _fmt(tr.z_sampled), "1" if tr.used_prediction else "0",
                    _fmt(tr.residual),
                )

    _write_csv(path, header, rows())


# ---------------------------------------------------------------------------
# experiments


def _resolve_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset:
        try:
            return read_dataset(config.dataset)
        except FileNotFoundError as exc:
            raise ConfigError(f"dataset not found: {config.dataset}") from exc
    if config.kind == "linear":
        return generate_linear(config.rows, config.cols, config.noise, config.data_seed)
    return generate_friedman1(config.rows, config.cols, config.noise, config.data_seed)


def _check_budget(config: ExperimentConfig, data: Dataset, loop_config: LoopConfig) -> None:
    if loop_config.setting != SETTING_SLIDING:
        return
    w = loop_config.window_size(data.n_rows)
    reserve = data.n_rows - w
    if loop_config.total_steps > reserve:
        raise ConfigError(
            f"steps {loop_config.total_steps} exceeds the sliding reserve of {reserve} items"
        )
    if w < 3:
        raise ConfigError(f"window of {w} items cannot support the retrain split")


def _summarize_report(report) -> dict:
    return {
        "probe_steps": report.probe_steps,
        "kappas": report.kappa_list,
        "psi_mean": report.psi_trace,
        "psi_std": report.psi_trace_std,
        "stddev_mean": report.stddev_trace,
        "stddev_std": report.stddev_trace_std,
        "interval_mass_mean": {repr(k): v for k, v in report.interval_masses.items()},
        "moment_l1_mean": report.moment_l1_trace,
        "normality_p_mean": report.normality_pvalues,
        "spike_counts": report.spike_counts,
        "repeats": report.repeats_aggregated,
    }


def _run_trace_experiment(config: ExperimentConfig, out_dir: Path) -> tuple[list, dict]:
    data = _resolve_dataset(config)
    loop_config = config.loop_config()
    _check_budget(config, data, loop_config)
    report = run(
        data,
        loop_config,
        probes=config.probes,
        kappa_list=list(config.kappas) if config.kappas is not None else None,
        collect_traces=config.collect_traces,
        workers=config.resolved_workers(),
    )
    outputs = []
    trace_path = out_dir / "trace.csv"
    write_trace_csv(trace_path, report)
    outputs.append(trace_path)
    if config.collect_traces:
        steps_path = out_dir / "steps.csv"
        write_steps_csv(steps_path, report)
        outputs.append(steps_path)
    summary = _summarize_report(report)

    if config.experiment == "normality":
        final = report.per_repeat["normality_p"][:, -1]
        valid = final[np.isfinite(final)]
        summary["final_rejection_fraction_005"] = (
            float(np.mean(valid < 0.05)) if valid.size else None
        )
    elif config.experiment == "autonomy":
        fits = {}
        steps = np.asarray(report.probe_steps, dtype=float)
        try:
            fits["full"] = autonomy_fit(steps, report.psi_trace).to_json_dict()
        except ValueError as exc:
            fits["full"] = {"error": str(exc)}
        if config.segment is not None:
            try:
                fits["segment"] = autonomy_fit(
                    steps, report.psi_trace, segment=config.segment
                ).to_json_dict()
            except ValueError as exc:
                fits["segment"] = {"error": str(exc)}
        per_repeat = []
        for r in range(report.repeats_aggregated):
            try:
                per_repeat.append(
                    autonomy_fit(steps, report.per_repeat["psi"][r]).to_json_dict()
                )
            except ValueError as exc:
                per_repeat.append({"error": str(exc)})
        summary["fits"] = fits
        summary["per_repeat_fits"] = per_repeat
    elif config.experiment == "moments":
        summary["moment_mean"] = {str(k): v for k, v in report.moment_traces.items()}
        summary["truncated_fraction"] = np.mean(
            report.per_repeat["moment_l1_truncated"], axis=0
        )
    return outputs, summary


def _run_sweep(config: ExperimentConfig, out_dir: Path) -> tuple[list, dict]:
    data = _resolve_dataset(config)
    loop_config = config.loop_config()
    _check_budget(config, data, loop_config)
    surface = stddev_surface(
        data,
        list(config.usage_grid),
        list(config.adherence_grid),
        loop_config,
        workers=config.resolved_workers(),
    )
    path = out_dir / "surface.csv"
    header = ["usage_p", "adherence_s", "mean_final_stddev", "std_final_stddev", "status"]

    def rows():
        for i, p in enumerate(surface.p_grid):
            for j, s in enumerate(surface.s_grid):
                status = surface.errors.get((i, j), "ok")
                yield (
                    _fmt(p), _fmt(s), _fmt(surface.mean[i, j]), _fmt(surface.std[i, j]),
                    status.replace(",", ";"),
                )

    _write_csv(path, header, rows())
    summary = {
        "p_grid": list(surface.p_grid),
        "s_grid": list(surface.s_grid),
        "mean_final_stddev": surface.mean,
        "std_final_stddev": surface.std,
        "errors": {f"{i},{j}": msg for (i, j), msg in surface.errors.items()},
    }
    return [path], summary


def _run_analytic_demo(config: ExperimentConfig, out_dir: Path) -> tuple[list, dict]:
    psi = _parse_psi(config.psi)
    base = gaussian_density(0.0, config.demo_variance)
    amap = AnalyticMap(base, psi)
    phi = triangle_test_function()
    t_list = list(config.t_list)
    weak = weak_limit_probe(amap, phi, t_list)
    norms = [envelope_norm(amap, t) for t in t_list]
    psi_values = [psi.at(t) for t in t_list]
    check = autonomy_check(psi, horizon=max(2, min(50, max(t_list))))
    path = out_dir / "analytic.csv"

    def rows():
        for t, pv, wv, nv in zip(t_list, psi_values, weak, norms):
            yield (str(t), "psi", _fmt(pv))
            yield (str(t), "weak_limit", _fmt(wv))
            yield (str(t), "norm", _fmt(nv))

    _write_csv(path, ["t", "stat_name", "value"], rows())
    summary = {
        "psi": config.psi,
        "demo_variance": config.demo_variance,
        "t_list": t_list,
        "psi_values": psi_values,
        "weak_limit": weak,
        "norms": norms,
        "autonomy": {
            "autonomous": check.autonomous,
            "max_violation": check.max_violation,
            "worst_pair": list(check.worst_pair),
        },
    }
    return [path], summary


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    manifest_path: Path
    output_paths: list
    status: str


def execute(config: ExperimentConfig) -> RunResult:
    """Run one experiment end to end, always leaving a manifest behind."""
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    outputs = []
    config_path = out_dir / "config.txt"
    flat = config.to_flat_dict()
    config_path.write_text(
        "".join(f"{k}={flat[k]}\n" for k in sorted(flat)), encoding="utf-8"
    )
    outputs.append(config_path)
    status = "ok"
    try:
        if config.experiment == "sweep":
            files, summary = _run_sweep(config, out_dir)
        elif config.experiment == "analytic_demo":
            files, summary = _run_analytic_demo(config, out_dir)
        else:
            files, summary = _run_trace_experiment(config, out_dir)
        outputs.extend(files)
        summary_path = out_dir / "summary.json"
        _write_json(summary_path, {"experiment": config.experiment, **summary})
        outputs.append(summary_path)
    except Exception as exc:
        status = f"failed: {exc}"
        raise
    finally:
        manifest_path = _write_manifest(out_dir, config, status, started, outputs)
    return RunResult(out_dir, manifest_path, outputs, status)


def _write_manifest(out_dir: Path, config, status, started, outputs) -> Path:
    manifest = {
        "tool_version": loopsim.__version__,
        "rng_algorithm": RNG_ALGORITHM,
        "seed": config.seed,
        "config_snapshot": config.to_flat_dict(),
        "config_hash": config_hash(config),
        "status": status,
        "started_at": started,
        "finished_at": _utcnow(),
        "output_paths": [p.name for p in outputs],
        "content_hashes": {p.name: sha256_file(p) for p in outputs if p.exists()},
    }
    path = out_dir / "manifest.json"
    _write_json(path, manifest)
    return path


def config_from_manifest(path) -> ExperimentConfig:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest is not valid JSON: {path}") from exc
    snapshot = manifest.get("config_snapshot")
    if not isinstance(snapshot, dict):
        raise ConfigError(f"manifest has no config_snapshot: {path}")
    return build_config(snapshot)


# ---------------------------------------------------------------------------
# report merging


def _verify_manifest(manifest_path: Path) -> dict:
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    for name, recorded in manifest.get("content_hashes", {}).items():
        target = base / name
        if not target.exists():
            raise IntegrityError(f"{target}: listed in manifest but missing")
        actual = sha256_file(target)
        if actual != recorded:
            raise IntegrityError(f"{target}: content hash mismatch")
    return manifest


def report(manifest_paths, out_dir) -> dict:
    """Merge verified run outputs into tidy long-format CSVs.

    Trace-style rows gain (config_hash, experiment) columns so disjoint
    configs stay separable; identical configs concatenate by repeat. Any
    hash mismatch aborts with the offending file named.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_rows, surface_rows, analytic_rows = [], [], []
    groups = {}
    for mp in manifest_paths:
        mp = Path(mp)
        manifest = _verify_manifest(mp)
        chash = manifest.get("config_hash", "")
        experiment = manifest.get("config_snapshot", {}).get("experiment", "")
        groups.setdefault(chash, {"experiment": experiment, "manifests": []})
        groups[chash]["manifests"].append(str(mp))
        base = mp.parent
        for name in manifest.get("output_paths", []):
            if not name.endswith(".csv"):
                continue
            lines = (base / name).read_text(encoding="utf-8").splitlines()
            header, body = lines[0], lines[1:]
            if name == "trace.csv":
                trace_rows.extend(f"{chash},{experiment},{row}" for row in body)
            elif name == "surface.csv":
                surface_rows.extend(f"{chash},{row}" for row in body)
            elif name == "analytic.csv":
                analytic_rows.extend(f"{chash},{row}" for row in body)
    written = []
    if trace_rows:
        path = out_dir / "merged_traces.csv"
        path.write_text(
            "config_hash,experiment,step,repeat,stat_name,value\n"
            + "\n".join(trace_rows) + "\n",
            encoding="utf-8",
        )
        written.append(path)
    if surface_rows:
        path = out_dir / "merged_surfaces.csv"
        path.write_text(
            "config_hash,usage_p,adherence_s,mean_final_stddev,std_final_stddev,status\n"
            + "\n".join(surface_rows) + "\n",
            encoding="utf-8",
        )
        written.append(path)
    if analytic_rows:
        path = out_dir / "merged_analytic.csv"
        path.write_text(
            "config_hash,t,stat_name,value\n" + "\n".join(analytic_rows) + "\n",
            encoding="utf-8",
        )
        written.append(path)
    summary = {
        "groups": groups,
        "merged_files": [p.name for p in written],
        "row_counts": {
            "traces": len(trace_rows),
            "surfaces": len(surface_rows),
            "analytic": len(analytic_rows),
        },
    }
    _write_json(out_dir / "report_summary.json", summary)
    return summary
