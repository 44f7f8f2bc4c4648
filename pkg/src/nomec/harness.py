"""Monte Carlo experiment harness: sweeps, trials, summaries, CSV/JSON output.

One scenario (topology + shadowing) is generated per sweep value; each trial
redraws only the fast fading. Seeds are derived from the master seed so that
identical specs reproduce identical result tables byte for byte.
"""

import csv
import dataclasses
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig, generate, realize_channels, with_channel
from .schedulers import SCHEMES, run_scheme

CSV_COLUMNS = ("scheme", "sweep_var", "sweep_value", "trial", "latency_s",
               "energy_j", "cost", "capacity", "scheduled", "wall_time_s",
               "vertices")


class HarnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    config: ScenarioConfig
    sweep_var: str = "n_uds"
    sweep_values: tuple = (24,)
    schemes: tuple = SCHEMES
    trials: int = 10
    master_seed: int = 0
    strict_cc2: bool = False
    mwis_ordering: str = "original"
    fallback_local: bool = True
    max_iters: int = 5
    timings: bool = False

    def __post_init__(self):
        if self.sweep_var not in {f.name for f in dataclasses.fields(ScenarioConfig)}:
            raise HarnessError(f"unknown sweep variable {self.sweep_var!r}")
        if not self.sweep_values:
            raise HarnessError("sweep_values is empty")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise HarnessError(f"unknown schemes: {', '.join(unknown)}")
        if self.trials < 1:
            raise HarnessError("trials must be >= 1")


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    sweep_var: str
    sweep_value: float
    trial: int
    latency_s: float
    energy_j: float
    cost: float
    capacity: int
    scheduled: int
    wall_time_s: float
    vertices: int


def _derive_seed(*path) -> int:
    return int(np.random.SeedSequence(list(path)).generate_state(1)[0])


def _value_config(spec: ExperimentSpec, index: int, value):
    field_value = value
    if spec.sweep_var in ("n_uds", "n_aps", "n_mecs", "rrbs_per_ap"):
        field_value = int(value)
    scenario_seed = _derive_seed(spec.master_seed, index)
    return dataclasses.replace(spec.config, seed=scenario_seed,
                               **{spec.sweep_var: field_value})


def _scalar_value(value):
    if isinstance(value, (tuple, list)):
        return float(sum(value)) / len(value)
    return float(value)


def _run_value(args):
    """All trials and schemes for one sweep value. Top-level for pickling."""
    spec, index, value = args
    config = _value_config(spec, index, value)
    scenario = generate(config)
    rows = []
    for trial in range(spec.trials):
        trial_scn = with_channel(scenario, realize_channels(scenario, trial))
        for scheme in spec.schemes:
            options = {"strict_cc2": spec.strict_cc2,
                       "fallback_local": spec.fallback_local,
                       "mwis_ordering": spec.mwis_ordering,
                       "max_iters": spec.max_iters}
            seed = _derive_seed(spec.master_seed, index, trial)
            start = time.perf_counter()
            try:
                _, plan = run_scheme(trial_scn, scheme, seed=seed, **options)
            except Exception as exc:  # noqa: BLE001 - one bad trial must not sink the sweep
                print(f"warning: {scheme} failed at {spec.sweep_var}={value} "
                      f"trial {trial}: {exc}", file=sys.stderr)
                rows.append(ResultRow(scheme, spec.sweep_var, _scalar_value(value),
                                      trial, 0.0, 0.0, 0.0, 0, 0, 0.0, 0))
                continue
            elapsed = time.perf_counter() - start if spec.timings else 0.0
            m = plan.metrics
            rows.append(ResultRow(scheme, spec.sweep_var, _scalar_value(value), trial,
                                  float(m.latency_s), float(m.energy_j), float(m.cost),
                                  int(m.effective_capacity), int(m.scheduled_uds),
                                  elapsed, int(plan.extras.get("vertices", 0))))
    return rows


def run_experiment(spec: ExperimentSpec, workers: int = 1):
    """Run the sweep and return rows ordered by (value, trial, scheme)."""
    units = [(spec, i, v) for i, v in enumerate(spec.sweep_values)]
    if workers <= 1 or len(units) == 1:
        chunks = [_run_value(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_value, units))
    return [row for chunk in chunks for row in chunk]


def summarize(rows):
    """Aggregate trials: mean and population standard deviation per
    (scheme, sweep_value), ordered as first encountered."""
    order = []
    buckets = {}
    for row in rows:
        key = (row.scheme, row.sweep_value)
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(row)
    out = []
    for scheme, value in order:
        group = buckets[(scheme, value)]
        summary = {"scheme": scheme, "sweep_var": group[0].sweep_var,
                   "sweep_value": value, "trials": len(group)}
        for metric in ("latency_s", "energy_j", "cost", "capacity", "scheduled"):
            data = np.array([getattr(r, metric) for r in group], dtype=float)
            summary[f"{metric}_mean"] = float(data.mean())
            summary[f"{metric}_std"] = float(data.std(ddof=0))
        out.append(summary)
    return out


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(getattr(row, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps([dataclasses.asdict(r) for r in rows], indent=2) + "\n"


def emit(rows, path: str, fmt: str = "csv"):
    """Write rows to path ("-" for stdout) as CSV or JSON."""
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise HarnessError(f"unknown output format {fmt!r}")
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise HarnessError(f"cannot write {path}: {exc}") from exc


def read_rows(path: str):
    """Read back a CSV produced by emit into ResultRow objects."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            rows.append(ResultRow(rec["scheme"], rec["sweep_var"],
                                  float(rec["sweep_value"]), int(rec["trial"]),
                                  float(rec["latency_s"]), float(rec["energy_j"]),
                                  float(rec["cost"]), int(rec["capacity"]),
                                  int(rec["scheduled"]), float(rec["wall_time_s"]),
                                  int(rec["vertices"])))
    return rows
