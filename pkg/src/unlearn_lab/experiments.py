"""Configuration-driven experiment runner with CSV/JSON emission.

Five experiments are exposed: closed-form verification of the linear
pipeline (``verify-theorems``), sweeps over the fine-tuning subset size
(``sweep-nt``) and the overlap width (``sweep-overlap``), and the
classifier demo and its regularization sweep (``classifier-demo``,
``sweep-alpha``).

Output contract: one CSV per run whose header comments materialize the
full, defaulted configuration (so the file is self-describing), plus a
JSON summary with pass/fail and a config echo.  Re-running a config
reproduces the CSV byte for byte except for the trailing runtime column.
Column sets are versioned via the ``# schema:`` header line.

``UNLEARN_LAB_THREADS`` caps parallelism across seeds; results are
buffered and emitted in seed order, so the thread count never changes
the output.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import (
    VARIANTS,
    ClassTask,
    FtConfig,
    run_unlearning_trial,
)
from .errors import ConfigError, UnlearnLabError
from .metrics import gap_report, measure_losses
from .oracle import predict_distinct, predict_edited, predict_overlap
from .scenarios import FeatureLayout, gen_scenario, fine_tune_subset
from .solvers import (
    EditOption,
    edit_pretrained,
    fine_tune_unlearn,
    retrain_golden,
    train_original,
)

EXPERIMENTS = (
    "verify-theorems",
    "sweep-nt",
    "sweep-overlap",
    "classifier-demo",
    "sweep-alpha",
)

SCHEMAS = {
    "verify-theorems": "verify-theorems/v1",
    "sweep-nt": "sweep-nt/v1",
    "sweep-overlap": "sweep-overlap/v1",
    "classifier-demo": "classifier/v1",
    "sweep-alpha": "classifier/v1",
}

COLUMNS = {
    "verify-theorems/v1": [
        "experiment", "seed", "check", "option",
        "d_r", "d_lap", "d_f", "n_r", "n_f", "n_t_min", "n_t_max",
        "rl_ft_max", "ul_ft_max", "rl_gold", "ul_gold", "ul_gold_pred",
        "ul_gold_rel_gap", "rl_edit_max", "ul_edit_max",
        "edit_rl_gap_max", "edit_ul_gap_max", "pass", "runtime_seconds",
    ],
    "sweep-nt/v1": [
        "experiment", "seed", "n_t", "rl_ft", "ul_ft", "rl_gold", "ul_gold",
        "rl_edit_zero", "ul_edit_zero", "rl_edit_retain", "ul_edit_retain",
        "rl_edit_discard", "ul_edit_discard", "runtime_seconds",
    ],
    "sweep-overlap/v1": [
        "experiment", "seed", "d_lap", "d_r", "d_f", "n_t",
        "rl_gold", "ul_gold", "rl_edit_retain", "ul_edit_retain",
        "rl_edit_discard", "ul_edit_discard", "runtime_seconds",
    ],
    "classifier/v1": [
        "experiment", "variant", "alpha", "seed", "ua", "ra", "ta",
        "runtime_seconds",
    ],
}


@dataclass
class ExperimentResult:
    """Rows plus bookkeeping for one experiment run."""

    experiment: str
    schema: str
    config: dict
    rows: list[list] = field(default_factory=list)
    passed: bool | None = None
    numerical_failures: int = 0
    total_runtime_seconds: float = 0.0

    @property
    def columns(self) -> list[str]:
        return COLUMNS[self.schema]


# ----------------------------------------------------------------------
# Configuration loading and validation
# ----------------------------------------------------------------------

def _require(kind, value, name, predicate, message):
    if not predicate(value):
        raise ConfigError(f"{kind}: field {name!r} {message} (got {value!r})")
    return value


def _as_layout(kind, raw, name) -> list[int]:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 3
        or not all(isinstance(v, int) and v >= 0 for v in raw)
    ):
        raise ConfigError(f"{kind}: field {name!r} must be three nonnegative ints")
    return list(raw)


def _as_seeds(kind, raw) -> list[int]:
    if not isinstance(raw, list) or not raw or not all(isinstance(s, int) for s in raw):
        raise ConfigError(f"{kind}: 'seeds' must be a non-empty list of integers")
    return list(raw)


def _as_tolerance(kind, raw) -> dict:
    tol = {"rel": 1e-8, "abs_floor": 1e-10}
    if raw is None:
        return tol
    if not isinstance(raw, dict):
        raise ConfigError(f"{kind}: 'tolerance' must be an object")
    for key in raw:
        if key not in tol:
            raise ConfigError(f"{kind}: unknown tolerance key {key!r}")
        value = raw[key]
        if not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"{kind}: tolerance {key!r} must be a nonnegative number")
        tol[key] = float(value)
    return tol


def _as_task(kind, raw) -> dict:
    task = {
        "num_classes": 5, "per_class": 100, "feature_dim": 20,
        "sep": 4.0, "forget_class": 0,
    }
    if raw is None:
        return task
    if not isinstance(raw, dict):
        raise ConfigError(f"{kind}: 'task' must be an object")
    for key in raw:
        if key not in task:
            raise ConfigError(f"{kind}: unknown task key {key!r}")
        task[key] = raw[key]
    _require(kind, task["num_classes"], "task.num_classes",
             lambda v: isinstance(v, int) and v >= 2, "must be an int >= 2")
    _require(kind, task["per_class"], "task.per_class",
             lambda v: isinstance(v, int) and v >= 1, "must be an int >= 1")
    _require(kind, task["feature_dim"], "task.feature_dim",
             lambda v: isinstance(v, int) and v >= task["num_classes"],
             "must be an int >= num_classes")
    _require(kind, task["sep"], "task.sep",
             lambda v: isinstance(v, (int, float)) and v > 0, "must be positive")
    _require(kind, task["forget_class"], "task.forget_class",
             lambda v: isinstance(v, int) and 0 <= v < task["num_classes"],
             "must name a valid class")
    return task


def _nt_range(kind, raw, n_r) -> list[int]:
    if raw is None:
        return list(range(1, n_r))
    if (
        not isinstance(raw, list)
        or not raw
        or not all(isinstance(v, int) and 1 <= v <= n_r - 1 for v in raw)
    ):
        raise ConfigError(
            f"{kind}: 'nt_values' must be a non-empty list of ints in [1, n_r - 1]"
        )
    return list(raw)


def validate_config(raw: dict, experiment: str) -> dict:
    """Normalize a raw config dict, materializing every default.

    Raises :class:`ConfigError` on unknown experiments, missing or
    malformed fields, or an ``experiment`` field that contradicts the
    requested experiment.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    declared = raw.get("experiment")
    if declared is not None and declared != experiment:
        raise ConfigError(
            f"config declares experiment {declared!r} but {experiment!r} was requested"
        )

    cfg: dict = {"experiment": experiment}
    cfg["seeds"] = _as_seeds(experiment, raw.get("seeds"))
    cfg["tolerance"] = _as_tolerance(experiment, raw.get("tolerance"))
    cfg["out"] = raw.get("out")
    if cfg["out"] is not None and not isinstance(cfg["out"], str):
        raise ConfigError(f"{experiment}: 'out' must be a string path")

    known = {"experiment", "seeds", "tolerance", "out"}

    if experiment in ("verify-theorems", "sweep-nt"):
        cfg["n_r"] = _require(experiment, raw.get("n_r", 30), "n_r",
                              lambda v: isinstance(v, int) and v >= 2, "must be an int >= 2")
        cfg["n_f"] = _require(experiment, raw.get("n_f", 10), "n_f",
                              lambda v: isinstance(v, int) and v >= 1, "must be an int >= 1")
        cfg["dist"] = _require(experiment, raw.get("dist", "standard-normal"), "dist",
                               lambda v: v in ("standard-normal", "uniform"),
                               "must be 'standard-normal' or 'uniform'")
        cfg["nt_values"] = _nt_range(experiment, raw.get("nt_values"), cfg["n_r"])
        known |= {"n_r", "n_f", "dist", "nt_values"}
        if experiment == "verify-theorems":
            cfg["distinct_layout"] = _as_layout(
                experiment, raw.get("distinct_layout", [20, 0, 20]), "distinct_layout")
            if cfg["distinct_layout"][1] != 0:
                raise ConfigError(f"{experiment}: 'distinct_layout' must have d_lap = 0")
            cfg["overlap_layout"] = _as_layout(
                experiment, raw.get("overlap_layout", [16, 8, 16]), "overlap_layout")
            known |= {"distinct_layout", "overlap_layout"}
            layouts = (cfg["distinct_layout"], cfg["overlap_layout"])
        else:
            cfg["layout"] = _as_layout(experiment, raw.get("layout", [20, 0, 20]), "layout")
            known |= {"layout"}
            layouts = (cfg["layout"],)
        for layout in layouts:
            if cfg["n_r"] + cfg["n_f"] > sum(layout):
                raise ConfigError(
                    f"{experiment}: n_r + n_f = {cfg['n_r'] + cfg['n_f']} exceeds "
                    f"d = {sum(layout)} for layout {layout}"
                )

    elif experiment == "sweep-overlap":
        cfg["d"] = _require(experiment, raw.get("d", 40), "d",
                            lambda v: isinstance(v, int) and v >= 2, "must be an int >= 2")
        cfg["n_r"] = _require(experiment, raw.get("n_r", 30), "n_r",
                              lambda v: isinstance(v, int) and v >= 2, "must be an int >= 2")
        cfg["n_f"] = _require(experiment, raw.get("n_f", 10), "n_f",
                              lambda v: isinstance(v, int) and v >= 1, "must be an int >= 1")
        cfg["n_t"] = _require(experiment, raw.get("n_t", 15), "n_t",
                              lambda v: isinstance(v, int) and 1 <= v <= cfg["n_r"] - 1,
                              "must be an int in [1, n_r - 1]")
        cfg["dist"] = _require(experiment, raw.get("dist", "standard-normal"), "dist",
                               lambda v: v in ("standard-normal", "uniform"),
                               "must be 'standard-normal' or 'uniform'")
        d_lap_values = raw.get("d_lap_values", [0, 2, 4, 8])
        if not isinstance(d_lap_values, list) or not d_lap_values:
            raise ConfigError(f"{experiment}: 'd_lap_values' must be a non-empty list")
        for d_lap in d_lap_values:
            if not isinstance(d_lap, int) or d_lap < 0 or (cfg["d"] - d_lap) % 2 or d_lap >= cfg["d"]:
                raise ConfigError(
                    f"{experiment}: each d_lap must be an int >= 0 with d - d_lap even "
                    f"and positive (d = {cfg['d']}, got {d_lap!r})"
                )
        cfg["d_lap_values"] = list(d_lap_values)
        if cfg["n_r"] + cfg["n_f"] > cfg["d"]:
            raise ConfigError(
                f"{experiment}: n_r + n_f = {cfg['n_r'] + cfg['n_f']} exceeds d = {cfg['d']}"
            )
        known |= {"d", "n_r", "n_f", "n_t", "dist", "d_lap_values"}

    else:  # classifier-demo, sweep-alpha
        cfg["task"] = _as_task(experiment, raw.get("task"))
        cfg["epochs"] = _require(experiment, raw.get("epochs", 500), "epochs",
                                 lambda v: isinstance(v, int) and v >= 0, "must be an int >= 0")
        cfg["step_size"] = _require(experiment, raw.get("step_size", 0.1), "step_size",
                                    lambda v: isinstance(v, (int, float)) and v > 0,
                                    "must be positive")
        allowed = VARIANTS + ("retrain",)
        variants = raw.get(
            "variants",
            list(allowed) if experiment == "classifier-demo" else ["kl-ft"],
        )
        if (
            not isinstance(variants, list) or not variants
            or not all(v in allowed for v in variants)
        ):
            raise ConfigError(
                f"{experiment}: 'variants' must be a non-empty list drawn from {allowed}"
            )
        cfg["variants"] = list(variants)
        known |= {"task", "epochs", "step_size", "variants"}
        if experiment == "classifier-demo":
            cfg["alpha"] = _require(experiment, raw.get("alpha", 0.5), "alpha",
                                    lambda v: isinstance(v, (int, float)) and 0 <= v <= 1,
                                    "must lie in [0, 1]")
            known |= {"alpha"}
        else:
            alphas = raw.get("alphas", [0.1, 0.2, 0.4, 0.8])
            if (
                not isinstance(alphas, list) or not alphas
                or not all(isinstance(a, (int, float)) and 0 <= a <= 1 for a in alphas)
            ):
                raise ConfigError(f"{experiment}: 'alphas' must be a non-empty list in [0, 1]")
            cfg["alphas"] = [float(a) for a in alphas]
            known |= {"alphas"}

    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{experiment}: unknown config keys {sorted(unknown)}")
    return cfg


def load_config(path: str | Path, experiment: str) -> dict:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return validate_config(raw, experiment)


# ----------------------------------------------------------------------
# Shared pipeline pieces
# ----------------------------------------------------------------------

def _thread_count() -> int:
    raw = os.environ.get("UNLEARN_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"UNLEARN_LAB_THREADS must be an integer, got {raw!r}")


def _map_seeds(fn, seeds):
    """Apply ``fn`` per seed, optionally in parallel, preserving seed order."""
    threads = _thread_count()
    if threads <= 1:
        return [fn(seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


def _edited_losses(scenario, w_o, option, n_t):
    """Edit the pretrained weights, fine-tune, and measure both losses.

    Returns ``(loss report, solver seconds)``; the timer covers only the
    edit and fine-tune calls, not data handling or measurement.
    """
    x_t, y_t = fine_tune_subset(scenario, n_t)
    start = time.perf_counter()
    edited = edit_pretrained(w_o, scenario.layout, option)
    w_hat = fine_tune_unlearn(edited, x_t, y_t)
    elapsed = time.perf_counter() - start
    return measure_losses(w_hat, scenario, "edited_fine_tuned"), elapsed


# ----------------------------------------------------------------------
# verify-theorems
# ----------------------------------------------------------------------

def _verify_rows_for_seed(cfg: dict, seed: int) -> list[list]:
    rel = cfg["tolerance"]["rel"]
    floor = cfg["tolerance"]["abs_floor"]
    nt_values = cfg["nt_values"]
    rows = []

    scenarios = {
        "distinct": gen_scenario(
            cfg["n_r"], cfg["n_f"], FeatureLayout(*cfg["distinct_layout"]),
            seed, cfg["dist"]),
        "overlap": gen_scenario(
            cfg["n_r"], cfg["n_f"], FeatureLayout(*cfg["overlap_layout"]),
            seed, cfg["dist"]),
    }
    pretrained = {check: train_original(s) for check, s in scenarios.items()}

    for check in ("distinct", "overlap"):
        scenario = scenarios[check]
        w_o = pretrained[check]
        predicted = predict_distinct(scenario) if check == "distinct" else predict_overlap(scenario)
        runtime = 0.0
        start = time.perf_counter()
        w_g = retrain_golden(scenario)
        runtime += time.perf_counter() - start
        rl_ft_max = ul_ft_max = 0.0
        ok = True
        for n_t in nt_values:
            x_t, y_t = fine_tune_subset(scenario, n_t)
            start = time.perf_counter()
            w_t = fine_tune_unlearn(w_o, x_t, y_t)
            runtime += time.perf_counter() - start
            ft = measure_losses(w_t, scenario, "fine_tuned")
            rl_ft_max = max(rl_ft_max, ft.rl)
            ul_ft_max = max(ul_ft_max, ft.ul)
            ok = ok and gap_report(ft, predicted, rel, floor).passed
        gold = measure_losses(w_g, scenario, "golden")
        gold_gaps = gap_report(gold, predicted, rel, floor)
        ok = ok and gold_gaps.passed
        rows.append([
            cfg["experiment"], seed, check, "",
            scenario.layout.d_r, scenario.layout.d_lap, scenario.layout.d_f,
            scenario.n_r, scenario.n_f, min(nt_values), max(nt_values),
            rl_ft_max, ul_ft_max, gold.rl, gold.ul, predicted.ul_gold,
            gold_gaps.entries[1].rel_gap, float("nan"), float("nan"),
            float("nan"), float("nan"), ok, runtime,
        ])

    for option in EditOption:
        check = "edit"
        family = "distinct" if option is EditOption.DISTINCT_ZERO_FORGET else "overlap"
        scenario = scenarios[family]
        w_o = pretrained[family]
        rl_edit_max = ul_edit_max = 0.0
        rl_gap_max = ul_gap_max = 0.0
        runtime = 0.0
        ok = True
        for n_t in nt_values:
            measured, elapsed = _edited_losses(scenario, w_o, option, n_t)
            runtime += elapsed
            predicted = predict_edited(scenario, option, n_t)
            gaps = gap_report(measured, predicted, rel, floor)
            ok = ok and gaps.passed
            rl_edit_max = max(rl_edit_max, measured.rl)
            ul_edit_max = max(ul_edit_max, measured.ul)
            rl_gap_max = max(rl_gap_max, gaps.entries[0].abs_gap)
            ul_gap_max = max(ul_gap_max, gaps.entries[1].abs_gap)
        rows.append([
            cfg["experiment"], seed, check, option.value,
            scenario.layout.d_r, scenario.layout.d_lap, scenario.layout.d_f,
            scenario.n_r, scenario.n_f, min(nt_values), max(nt_values),
            float("nan"), float("nan"), float("nan"), float("nan"), float("nan"),
            float("nan"), rl_edit_max, ul_edit_max,
            rl_gap_max, ul_gap_max, ok, runtime,
        ])
    return rows


def run_verify_theorems(cfg: dict) -> ExperimentResult:
    """Full pipeline versus closed-form predictions, one row per check."""
    result = ExperimentResult(cfg["experiment"], SCHEMAS[cfg["experiment"]], cfg)
    start = time.perf_counter()
    pass_index = result.columns.index("pass")
    for group in _map_seeds(lambda s: _attempt(cfg, s, _verify_rows_for_seed), cfg["seeds"]):
        if isinstance(group, Exception):
            result.numerical_failures += 1
            continue
        result.rows.extend(group)
    result.passed = (
        result.numerical_failures == 0
        and all(row[pass_index] for row in result.rows)
    )
    result.total_runtime_seconds = time.perf_counter() - start
    return result


def _attempt(cfg, seed, fn):
    """Run one seed's computation, returning the exception on numeric failure."""
    try:
        return fn(cfg, seed)
    except UnlearnLabError as exc:
        return exc


# ----------------------------------------------------------------------
# sweep-nt
# ----------------------------------------------------------------------

def _sweep_nt_rows_for_seed(cfg: dict, seed: int) -> list[list]:
    layout = FeatureLayout(*cfg["layout"])
    scenario = gen_scenario(cfg["n_r"], cfg["n_f"], layout, seed, cfg["dist"])
    w_o = train_original(scenario)
    w_g = retrain_golden(scenario)
    gold = measure_losses(w_g, scenario, "golden")
    rows = []
    for n_t in cfg["nt_values"]:
        x_t, y_t = fine_tune_subset(scenario, n_t)
        start = time.perf_counter()
        w_t = fine_tune_unlearn(w_o, x_t, y_t)
        runtime = time.perf_counter() - start
        ft = measure_losses(w_t, scenario, "fine_tuned")
        if layout.is_distinct:
            zero, elapsed = _edited_losses(scenario, w_o, EditOption.DISTINCT_ZERO_FORGET, n_t)
            zero_rl, zero_ul = zero.rl, zero.ul
            runtime += elapsed
        else:
            zero_rl = zero_ul = float("nan")
        retain, elapsed = _edited_losses(scenario, w_o, EditOption.OVERLAP_RETAIN, n_t)
        runtime += elapsed
        discard, elapsed = _edited_losses(scenario, w_o, EditOption.OVERLAP_DISCARD, n_t)
        runtime += elapsed
        rows.append([
            cfg["experiment"], seed, n_t, ft.rl, ft.ul, gold.rl, gold.ul,
            zero_rl, zero_ul, retain.rl, retain.ul, discard.rl, discard.ul,
            runtime,
        ])
    return rows


def run_sweep_nt(cfg: dict) -> ExperimentResult:
    """Losses of all pipelines as the fine-tuning subset grows."""
    result = ExperimentResult(cfg["experiment"], SCHEMAS[cfg["experiment"]], cfg)
    start = time.perf_counter()
    for group in _map_seeds(lambda s: _attempt(cfg, s, _sweep_nt_rows_for_seed), cfg["seeds"]):
        if isinstance(group, Exception):
            result.numerical_failures += 1
            continue
        result.rows.extend(group)
    result.total_runtime_seconds = time.perf_counter() - start
    return result


# ----------------------------------------------------------------------
# sweep-overlap
# ----------------------------------------------------------------------

def _sweep_overlap_rows_for_seed(cfg: dict, seed: int) -> list[list]:
    rows = []
    for d_lap in cfg["d_lap_values"]:
        side = (cfg["d"] - d_lap) // 2
        layout = FeatureLayout(side, d_lap, side)
        scenario = gen_scenario(cfg["n_r"], cfg["n_f"], layout, seed, cfg["dist"])
        w_o = train_original(scenario)
        start = time.perf_counter()
        w_g = retrain_golden(scenario)
        runtime = time.perf_counter() - start
        gold = measure_losses(w_g, scenario, "golden")
        retain, elapsed = _edited_losses(scenario, w_o, EditOption.OVERLAP_RETAIN, cfg["n_t"])
        runtime += elapsed
        discard, elapsed = _edited_losses(scenario, w_o, EditOption.OVERLAP_DISCARD, cfg["n_t"])
        runtime += elapsed
        rows.append([
            cfg["experiment"], seed, d_lap, side, side, cfg["n_t"],
            gold.rl, gold.ul, retain.rl, retain.ul, discard.rl, discard.ul,
            runtime,
        ])
    return rows


def run_sweep_overlap(cfg: dict) -> ExperimentResult:
    """Editing-strategy losses as the overlap block widens."""
    result = ExperimentResult(cfg["experiment"], SCHEMAS[cfg["experiment"]], cfg)
    start = time.perf_counter()
    for group in _map_seeds(
        lambda s: _attempt(cfg, s, _sweep_overlap_rows_for_seed), cfg["seeds"]
    ):
        if isinstance(group, Exception):
            result.numerical_failures += 1
            continue
        result.rows.extend(group)
    result.total_runtime_seconds = time.perf_counter() - start
    return result


# ----------------------------------------------------------------------
# classifier-demo and sweep-alpha
# ----------------------------------------------------------------------

def _classifier_rows(cfg: dict, pairs: list[tuple[str, float]]) -> ExperimentResult:
    result = ExperimentResult(cfg["experiment"], SCHEMAS[cfg["experiment"]], cfg)
    start = time.perf_counter()
    task = ClassTask(**cfg["task"])
    base_cfg = FtConfig(
        variant="naive-ft", epochs=cfg["epochs"], step_size=cfg["step_size"]
    )

    def one_seed(seed: int) -> list[list]:
        rows = []
        for variant, alpha in pairs:
            metrics = run_unlearning_trial(task, variant, alpha, seed, base_cfg)
            shown_alpha = float("nan") if variant == "retrain" else alpha
            rows.append([
                cfg["experiment"], variant, shown_alpha, seed,
                metrics.ua, metrics.ra, metrics.ta, metrics.runtime_seconds,
            ])
        return rows

    per_seed = _map_seeds(lambda s: _attempt(cfg, s, lambda _c, s_: one_seed(s_)), cfg["seeds"])
    # NaN keys break dict grouping, so group by the rendered alpha instead.
    collected: dict[tuple[str, str], list[list]] = {}
    for group in per_seed:
        if isinstance(group, Exception):
            result.numerical_failures += 1
            continue
        result.rows.extend(group)
        for row in group:
            collected.setdefault((row[1], _format_cell(row[2])), []).append(row)

    # Aggregate mean/std rows appended after the per-seed rows.
    for (variant, _), group in collected.items():
        values = np.array([row[4:8] for row in group], dtype=np.float64)
        for stat, vec in (("mean", values.mean(axis=0)), ("std", values.std(axis=0))):
            result.rows.append([
                cfg["experiment"], variant, group[0][2], stat,
                float(vec[0]), float(vec[1]), float(vec[2]), float(vec[3]),
            ])
    result.total_runtime_seconds = time.perf_counter() - start
    return result


def run_classifier_demo(cfg: dict) -> ExperimentResult:
    """All configured variants at one regularization weight."""
    pairs = [(variant, float(cfg["alpha"])) for variant in cfg["variants"]]
    return _classifier_rows(cfg, pairs)


def run_sweep_alpha(cfg: dict) -> ExperimentResult:
    """Configured variants across a grid of regularization weights."""
    pairs = [
        (variant, alpha)
        for variant in cfg["variants"]
        for alpha in cfg["alphas"]
    ]
    return _classifier_rows(cfg, pairs)


# ----------------------------------------------------------------------
# Dispatch and output
# ----------------------------------------------------------------------

_RUNNERS = {
    "verify-theorems": run_verify_theorems,
    "sweep-nt": run_sweep_nt,
    "sweep-overlap": run_sweep_overlap,
    "classifier-demo": run_classifier_demo,
    "sweep-alpha": run_sweep_alpha,
}


def run_experiment(experiment: str, cfg: dict) -> ExperimentResult:
    """Dispatch a validated config to its runner."""
    if experiment not in _RUNNERS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    return _RUNNERS[experiment](cfg)


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_csv(result: ExperimentResult) -> str:
    """CSV text with schema and config echo in the header comments."""
    echo = json.dumps(result.config, sort_keys=True, separators=(",", ":"))
    lines = [f"# schema: {result.schema}", f"# config: {echo}"]
    lines.append(",".join(result.columns))
    for row in result.rows:
        lines.append(",".join(_format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def summary_path_for(csv_path: Path) -> Path:
    return csv_path.with_suffix(".summary.json")


def write_outputs(result: ExperimentResult, csv_path: str | Path) -> Path:
    """Write the CSV and its JSON summary; returns the CSV path."""
    csv_path = Path(csv_path)
    if csv_path.parent and not csv_path.parent.exists():
        csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(render_csv(result), encoding="utf-8")
    summary = {
        "experiment": result.experiment,
        "schema": result.schema,
        "config": result.config,
        "csv": str(csv_path),
        "rows": len(result.rows),
        "passed": result.passed,
        "numerical_failures": result.numerical_failures,
        "total_runtime_seconds": result.total_runtime_seconds,
    }
    summary_path_for(csv_path).write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return csv_path


def exit_code_for(result: ExperimentResult) -> int:
    """0 when everything passed, 1 on numerical failures or failed checks."""
    if result.numerical_failures > 0:
        return 1
    if result.passed is False:
        return 1
    return 0
