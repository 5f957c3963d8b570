"""Evaluation harness: how good is a coreset as a stand-in for its dataset?

Two metrics, both computed per (dataset, coreset, problem) triple:

  * normalized cost: cost(P, model trained on the coreset) divided by
    cost(P, model trained on P itself); 1.0 means the coreset gives away
    nothing.  For svm the headline metric is test accuracy instead.
  * relative error: |cost(P, x) - cost(coreset, x)| / cost(P, x) at the
    coreset-trained model x -- how honestly the coreset reports the cost
    it was optimized against.

``run_benchmark`` sweeps dataset x algorithm x size x problem cells for R
seeded runs each and writes runs.csv / summary.json / cdf.csv (plus wall
times in timings.csv, kept separate so result files are bit-reproducible).
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .baselines import farthest_point, sensitivity_sample, uniform_sample
from .coreset import Coreset, rcc, rcc_fixed_size
from .data import (
    ShardSpec,
    WeightedPointSet,
    load_dataset,
    normalize_features,
    partition_dataset,
    split_train_test,
    synthetic_blobs,
    synthetic_uniform,
    with_svm_labels,
)
from .distributed import cdcc, drcc
from .errors import KcoresetError, ValidationError
from .problems import MLProblem, make_problem, problem_cost, solve_problem, svm_accuracy

WORKERS_ENV_VAR = "COReset_WORKERS"
CDF_GRID_POINTS = 200


@dataclass
class EvalRecord:
    dataset: str
    algorithm: str
    problem: str
    size: str
    run: int
    seed: int
    metric: str
    value: float
    relative_error: float
    coreset_points: int
    clamped: bool
    eps_bound: float | None
    error: str | None
    wall_time: float

    ROW_FIELDS = (
        "dataset", "algorithm", "problem", "size", "run", "seed", "metric",
        "value", "relative_error", "coreset_points", "clamped", "eps_bound",
        "error",
    )

    def to_row(self) -> list:
        data = asdict(self)
        return [_csv_cell(data[name]) for name in self.ROW_FIELDS]


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def evaluate_coreset(
    pointset: WeightedPointSet,
    coreset: Coreset,
    problem: MLProblem,
    seed: int = 0,
    full_model=None,
    full_cost: float | None = None,
) -> dict:
    """Train on the coreset, score against the full dataset.

    Negative coreset weights (distributed residuals) are clamped for the
    solver but kept as-is when reading the coreset's own cost estimate.
    Returns a dict with the headline metric, the relative estimation error,
    and bookkeeping flags.
    """
    usable, clamped = coreset.nonnegative_pointset()
    model = solve_problem(problem, usable, seed=seed)
    cost_full = problem_cost(problem, pointset, model)
    cost_core = problem_cost(problem, coreset, model)
    rel_error = abs(cost_full - cost_core) / cost_full if cost_full > 0 else math.inf

    if problem.name == "svm":
        value = svm_accuracy(pointset, model)
        metric = "accuracy"
    else:
        if full_model is None or full_cost is None:
            full_model = solve_problem(problem, pointset, seed=seed)
            full_cost = problem_cost(problem, pointset, full_model)
        value = cost_full / full_cost if full_cost > 0 else math.inf
        metric = "normalized_cost"
    return {
        "metric": metric,
        "value": float(value),
        "relative_error": float(rel_error),
        "cost_full": float(cost_full),
        "cost_coreset": float(cost_core),
        "clamped": clamped,
        "coreset_points": coreset.size,
        "eps_bound": coreset.eps_bound,
    }


def quantile_grid(values, grid_points: int = CDF_GRID_POINTS):
    """Empirical quantiles on an evenly spaced probability grid in [0, 1]."""
    levels = np.linspace(0.0, 1.0, grid_points)
    if len(values) == 0:
        return levels, np.full(grid_points, np.nan)
    return levels, np.quantile(np.asarray(values, dtype=float), levels)


# ---------------------------------------------------------------------------
# benchmark configuration


_SYNTH_KINDS = ("blobs", "uniform")


def _load_config_dataset(entry: dict) -> WeightedPointSet:
    name = entry.get("name", "<unnamed>")
    if "path" in entry:
        pointset = load_dataset(
            entry["path"],
            weight_column=entry.get("weight_column", "weight"),
            label_column=entry.get("label_column"),
        )
        if entry.get("normalize", True):
            pointset = normalize_features(pointset)
        return pointset
    spec = entry.get("synthetic")
    if not spec:
        raise ValidationError(f"dataset {name!r} needs either 'path' or 'synthetic'")
    kind = spec.get("kind")
    if kind == "blobs":
        return synthetic_blobs(
            n=spec.get("n", 150),
            num_features=spec.get("features", 4),
            num_labels=spec.get("labels", 3),
            spread=spec.get("spread", 0.08),
            seed=spec.get("seed", 0),
        )
    if kind == "uniform":
        return synthetic_uniform(
            n=spec.get("n", 1000),
            dim=spec.get("dim", 3),
            low=spec.get("low", 0.0),
            high=spec.get("high", 1.0),
            seed=spec.get("seed", 0),
        )
    raise ValidationError(f"dataset {name!r}: unknown synthetic kind {kind!r}; "
                          f"choose from {_SYNTH_KINDS}")


def _make_problem_from_entry(entry: dict) -> MLProblem:
    return make_problem(
        entry["name"],
        k=entry.get("k", 2),
        l=entry.get("l", 2),
        delta=entry.get("delta"),
        positive_label=entry.get("positive_label"),
    )


def construct_coreset(
    algorithm: dict,
    pointset: WeightedPointSet,
    size: int | None,
    seed: int,
) -> Coreset:
    """Build a coreset according to an algorithm spec dict.

    ``kind`` selects the construction; distributed kinds re-partition the
    dataset with a seed derived from ``seed``, so every run sees a fresh
    random distribution of the data over nodes.
    """
    kind = algorithm.get("kind", algorithm.get("name"))
    z = int(algorithm.get("z", 2))
    if kind == "rcc":
        return rcc(
            pointset,
            eps=float(algorithm["eps"]),
            rho=float(algorithm.get("rho", 1.0)),
            z=z,
            seed=seed,
        )
    if kind == "rcc_fixed":
        return rcc_fixed_size(
            pointset, int(size), z=z, seed=seed,
            rho=float(algorithm.get("rho", 1.0)),
            certify=bool(algorithm.get("certify", True)),
        )
    if kind == "uniform":
        return uniform_sample(pointset, int(size), seed=seed)
    if kind == "sensitivity":
        return sensitivity_sample(pointset, int(size), k=algorithm.get("k"), seed=seed)
    if kind == "farthest":
        return farthest_point(pointset, int(size), seed=seed)
    if kind in ("drcc", "cdcc"):
        rng = np.random.default_rng(seed)
        spec = ShardSpec(
            scheme=algorithm.get("scheme", "uniform"),
            n=int(algorithm["nodes"]),
            n0=algorithm.get("n0"),
            seed=int(rng.integers(2**63)),
        )
        shards = partition_dataset(pointset, spec)
        proto_seed = int(rng.integers(2**63))
        if kind == "drcc":
            coreset, _ = drcc(
                shards, int(size), K=int(algorithm.get("K", 5)),
                z=int(algorithm.get("z", 1)), seed=proto_seed,
            )
            return coreset
        return cdcc(
            shards, int(size), k=int(algorithm.get("k", 2)),
            z=int(algorithm.get("z", 2)), seed=proto_seed,
        )
    raise ValidationError(f"unknown algorithm kind {kind!r}")


def _worker_count(explicit: int | None, config: dict) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"{WORKERS_ENV_VAR} must be an integer, got {env!r}")
    return max(1, int(config.get("workers", 1)))


def run_benchmark(config: dict, out_dir: str | None = None, workers: int | None = None):
    """Sweep dataset x algorithm x size x problem cells for R runs each.

    Worker count (from the ``workers`` argument, the COReset_WORKERS
    environment variable, or the config) only parallelizes execution; the
    records and output files are identical for any value.

    Returns (records, summary); when out_dir is given also writes runs.csv,
    summary.json, cdf.csv and timings.csv there.
    """
    master_seed = int(config.get("seed", 0))
    runs = int(config.get("runs", 1))
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    if not config.get("datasets"):
        raise ValidationError("config needs a non-empty 'datasets' list")
    if not config.get("algorithms"):
        raise ValidationError("config needs a non-empty 'algorithms' list")
    if not config.get("problems"):
        raise ValidationError("config needs a non-empty 'problems' list")
    sizes = config.get("sizes", [None])

    datasets = [
        (entry.get("name", f"dataset{i}"), _load_config_dataset(entry))
        for i, entry in enumerate(config["datasets"])
    ]
    problems = [
        (entry.get("name"), _make_problem_from_entry(entry), entry)
        for entry in config["problems"]
    ]

    # cache of full-dataset solutions, shared across cells
    full_cache: dict = {}

    def full_solution(ds_name, pointset, problem, di, pi):
        key = (ds_name, problem.name, json.dumps(problem.params, sort_keys=True, default=str))
        if key not in full_cache:
            solver_seed = _derived_seed(master_seed, (0xF0, di, pi))
            model = solve_problem(problem, pointset, seed=solver_seed)
            full_cache[key] = (model, problem_cost(problem, pointset, model))
        return full_cache[key]

    tasks = []
    for di, (ds_name, pointset) in enumerate(datasets):
        for ai, algorithm in enumerate(config["algorithms"]):
            algo_name = algorithm.get("name", algorithm.get("kind", f"algo{ai}"))
            for si, size in enumerate(sizes):
                for run in range(runs):
                    tasks.append((di, ds_name, pointset, ai, algorithm, algo_name, si, size, run))

    def run_task(task):
        di, ds_name, pointset, ai, algorithm, algo_name, si, size, run = task
        seed = _derived_seed(master_seed, (di, ai, si, run))
        records = []
        started = time.perf_counter()
        svm_problems = [p for p in problems if p[1].name == "svm"]
        plain_problems = [p for p in problems if p[1].name != "svm"]
        coreset = None
        build_error = None
        if plain_problems:
            try:
                coreset = construct_coreset(algorithm, pointset, size, seed)
            except KcoresetError as exc:
                build_error = f"{type(exc).__name__}: {exc}"
        for pi, (p_name, problem, entry) in enumerate(problems):
            label = p_name or problem.name
            if problem.name == "svm":
                record = _run_svm_cell(
                    ds_name, pointset, algorithm, algo_name, size, run, seed,
                    problem, entry, label,
                )
            elif build_error is not None:
                record = _failed_record(
                    ds_name, algo_name, label, size, run, seed, build_error
                )
            else:
                try:
                    full_model, full_cost = full_solution(ds_name, pointset, problem, di, pi)
                    outcome = evaluate_coreset(
                        pointset, coreset, problem,
                        seed=_derived_seed(master_seed, (di, ai, si, run, pi)),
                        full_model=full_model, full_cost=full_cost,
                    )
                    record = EvalRecord(
                        dataset=ds_name, algorithm=algo_name, problem=label,
                        size=_size_label(size), run=run, seed=seed,
                        metric=outcome["metric"], value=outcome["value"],
                        relative_error=outcome["relative_error"],
                        coreset_points=outcome["coreset_points"],
                        clamped=outcome["clamped"],
                        eps_bound=outcome["eps_bound"], error=None, wall_time=0.0,
                    )
                except KcoresetError as exc:
                    record = _failed_record(
                        ds_name, algo_name, label, size, run, seed,
                        f"{type(exc).__name__}: {exc}",
                    )
            records.append(record)
        total = time.perf_counter() - started
        for record in records:
            record.wall_time = total / max(len(records), 1)
        return records

    # full solutions are computed up-front so worker threads only read the cache
    for di, (ds_name, pointset) in enumerate(datasets):
        for pi, (_, problem, _entry) in enumerate(problems):
            if problem.name != "svm":
                full_solution(ds_name, pointset, problem, di, pi)

    count = _worker_count(workers, config)
    if count == 1:
        nested = [run_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=count) as pool:
            nested = list(pool.map(run_task, tasks))
    records = [record for group in nested for record in group]
    records.sort(key=lambda r: (r.dataset, r.algorithm, r.problem, str(r.size), r.run))

    summary = _summarize(records)
    if out_dir:
        _write_outputs(records, summary, out_dir)
    return records, summary


def _derived_seed(master: int, key: tuple) -> int:
    seq = np.random.SeedSequence(master, spawn_key=tuple(int(v) for v in key))
    return int(seq.generate_state(1)[0])


def _size_label(size) -> str:
    return "auto" if size is None else str(size)


def _failed_record(ds, algo, problem, size, run, seed, message) -> EvalRecord:
    return EvalRecord(
        dataset=ds, algorithm=algo, problem=problem, size=_size_label(size),
        run=run, seed=seed, metric="error", value=math.nan,
        relative_error=math.nan, coreset_points=0, clamped=False,
        eps_bound=None, error=message, wall_time=0.0,
    )


def _run_svm_cell(
    ds_name, pointset, algorithm, algo_name, size, run, seed, problem, entry, label
) -> EvalRecord:
    positive = entry.get("positive_label") or problem.params.get("positive_label")
    try:
        if positive is None:
            raise ValidationError("svm problem entries need 'positive_label'")
        relabeled = with_svm_labels(pointset, positive)
        train, test = split_train_test(relabeled, entry.get("train_fraction", 0.8))
        coreset = construct_coreset(algorithm, train, size, seed)
        usable, clamped = coreset.nonnegative_pointset()
        model = solve_problem(problem, usable, seed=seed)
        cost_train = problem_cost(problem, train, model)
        cost_core = problem_cost(problem, coreset, model)
        rel = abs(cost_train - cost_core) / cost_train if cost_train > 0 else math.inf
        return EvalRecord(
            dataset=ds_name, algorithm=algo_name, problem=label,
            size=_size_label(size), run=run, seed=seed, metric="accuracy",
            value=svm_accuracy(test, model),
            relative_error=float(rel),
            coreset_points=coreset.size, clamped=clamped,
            eps_bound=None, error=None, wall_time=0.0,
        )
    except KcoresetError as exc:
        return _failed_record(
            ds_name, algo_name, label, size, run, seed, f"{type(exc).__name__}: {exc}"
        )


def _summarize(records: list) -> dict:
    cells: dict = {}
    for r in records:
        key = (r.dataset, r.algorithm, r.problem, r.size)
        cells.setdefault(key, []).append(r)
    summary: dict = {}
    for (ds, algo, problem, size), group in sorted(cells.items()):
        good = [r for r in group if r.error is None]
        values = np.array([r.value for r in good])
        rels = np.array([r.relative_error for r in good if math.isfinite(r.relative_error)])
        node = summary.setdefault(ds, {}).setdefault(algo, {}).setdefault(problem, {})
        node[size] = {
            "runs": len(group),
            "failed": len(group) - len(good),
            "metric": good[0].metric if good else "error",
            "mean": float(values.mean()) if values.size else None,
            "std": float(values.std()) if values.size else None,
            "median": float(np.median(values)) if values.size else None,
            "mean_relative_error": float(rels.mean()) if rels.size else None,
            "max_relative_error": float(rels.max()) if rels.size else None,
            "mean_coreset_points": float(np.mean([r.coreset_points for r in good]))
            if good else None,
        }
    return summary


def _write_outputs(records: list, summary: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EvalRecord.ROW_FIELDS)
        for r in records:
            writer.writerow(r.to_row())
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "cdf.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["dataset", "algorithm", "problem", "size", "grid_index", "level", "value"]
        )
        cells: dict = {}
        for r in records:
            if r.error is None and math.isfinite(r.value):
                cells.setdefault((r.dataset, r.algorithm, r.problem, r.size), []).append(r.value)
        for key in sorted(cells):
            levels, quantiles = quantile_grid(cells[key])
            for i, (level, q) in enumerate(zip(levels, quantiles)):
                writer.writerow(list(key) + [i, repr(float(level)), repr(float(q))])
    with open(os.path.join(out_dir, "timings.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "algorithm", "problem", "size", "run", "wall_time"])
        for r in records:
            writer.writerow(
                [r.dataset, r.algorithm, r.problem, r.size, r.run, repr(r.wall_time)]
            )
