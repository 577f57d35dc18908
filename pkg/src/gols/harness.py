"""Experiment orchestration: configured runs, seed averaging and outputs.

A training experiment is fully determined by (config, seed): run r of a
repeated experiment derives three independent random streams from
seed_base + r (weight initialization, dataset split, batch sampling), so
switching the batch regime never perturbs the starting point. Loss curves
are logged against both iterations and cumulative gradient evaluations;
the evaluation counter inside the evaluator provides an independent audit
of the per-iteration accounting. Aggregated curves and the scan-derived
event densities are emitted as CSV files, optionally with rendered
figures alongside.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import estimate_pdf, scan_line, write_pdf_csv
from .core import SeededRng, uniform_init
from .data import (BatchSampler, Dataset, DatasetSchema, FULL, load_dataset,
                   normalize_batch_mode, split_2_1_1, standardize)
from .linesearch import LineFunction, MbssEvaluator, fixed_step
from .model import (MlpSpec, backprop_gradient, forward_loss,
                    hidden_units_heuristic, param_count)
from .optim import FixedStep, GolsiStep, IterationState, iterate, make_rule

# Sub-stream ids hung off each run seed.
STREAM_INIT = 0
STREAM_SPLIT = 1
STREAM_SAMPLER = 2
# Scan runs get one sampler stream per (batch size, run) pair.
STREAM_SCAN_BASE = 100

# Seed of the fallback reference weights used by directional-scan
# experiments when no bundled reference ray is supplied.
REFERENCE_WEIGHTS_SEED = 20

INIT_RANGE = (-0.1, 0.1)


@dataclass
class ExperimentConfig:
    """Everything a training experiment needs; mirrors the CLI flags."""

    dataset: str
    manifest: str | None = None
    optimizer: str = "sgd"
    step: str = "golsi"  # golsi | small | medium | large
    iters: int = 3000
    batch: int = 32
    batch_mode: str = "dynamic"
    runs: int = 10
    seed: int = 0
    hidden_layers: int = 1
    hidden_nodes: int | None = None
    loss: str = "mse"
    activation: str = "sigmoid"
    beta1: float = 0.9
    gamma: float | None = None
    paper_literal: bool = False
    standard_bias_correction: bool = False
    reuse_f0: bool = True
    log_every: int = 10
    halt_on_nonfinite: bool = False
    out: str | None = None

    def validate(self):
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not 1 <= self.hidden_layers <= 6:
            raise ValueError("hidden_layers must be in 1..6")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.step not in ("golsi", "small", "medium", "large"):
            raise ValueError(f"unknown step rule {self.step!r}")
        normalize_batch_mode(self.batch_mode)

    @property
    def tag(self) -> str:
        name = Path(self.dataset).stem
        return f"{name}_{self.optimizer}_{self.step}"


@dataclass
class RunLog:
    """Per-iteration records of one training run plus audit totals."""

    seed: int
    records: list
    initial_train_loss: float
    initial_val_loss: float
    initial_test_loss: float
    evaluator_total: int
    halted: bool = False

    @property
    def cumulative_evals(self) -> np.ndarray:
        return np.cumsum([r.k for r in self.records])

    @property
    def total_evals(self) -> int:
        return int(sum(r.k for r in self.records))

    @property
    def mean_evals_per_iter(self) -> float:
        return self.total_evals / max(len(self.records), 1)

    @property
    def final_train_loss(self) -> float:
        return self.records[-1].train_loss if self.records else math.nan

    def summary(self) -> dict:
        train = np.array([r.train_loss for r in self.records])
        finite = train[np.isfinite(train)]
        return {
            "seed": self.seed,
            "iterations": len(self.records),
            "initial_train_loss": self.initial_train_loss,
            "final_train_loss": self.final_train_loss,
            "best_train_loss": float(finite.min()) if finite.size else math.nan,
            "final_val_loss": self.records[-1].val_loss if self.records else math.nan,
            "final_test_loss": self.records[-1].test_loss if self.records else math.nan,
            "mean_evals_per_iter": self.mean_evals_per_iter,
            "total_evals": self.total_evals,
        }


class LossMonitor:
    """Full-subset losses every ``log_every`` iterations, carried between."""

    def __init__(self, spec: MlpSpec, dataset: Dataset, split, log_every: int,
                 iterations: int):
        self.spec = spec
        self.subsets = {
            "train": dataset.batch(split.train),
            "val": dataset.batch(split.validation),
            "test": dataset.batch(split.test),
        }
        self.log_every = log_every
        self.last_iteration = iterations - 1
        self._carried = (math.nan, math.nan, math.nan)

    def compute(self, x) -> tuple[float, float, float]:
        values = tuple(forward_loss(self.spec, x, feats, targets)
                       for feats, targets in self.subsets.values())
        self._carried = values
        return values

    def __call__(self, n: int, x) -> tuple[float, float, float]:
        if n % self.log_every == 0 or n == self.last_iteration:
            return self.compute(x)
        return self._carried


def resolve_hidden_nodes(cfg: ExperimentConfig, ds: Dataset,
                         schema: DatasetSchema) -> int:
    """Explicit setting, then the manifest override, then the sizing rule."""
    if cfg.hidden_nodes is not None:
        return cfg.hidden_nodes
    if schema.hidden_nodes_override is not None:
        return schema.hidden_nodes_override
    return hidden_units_heuristic(ds.m, ds.d, ds.k)


def build_mlp_spec(cfg: ExperimentConfig, ds: Dataset,
                   schema: DatasetSchema) -> MlpSpec:
    h = resolve_hidden_nodes(cfg, ds, schema)
    sizes = (ds.d,) + (h,) * cfg.hidden_layers + (ds.k,)
    return MlpSpec(layer_sizes=sizes, hidden_activation=cfg.activation,
                   output_head=cfg.loss)


def _make_rule(cfg: ExperimentConfig):
    kind = cfg.optimizer.lower()
    hyper = {}
    if kind == "sgdm":
        hyper["gamma"] = cfg.gamma if cfg.gamma is not None else 0.9
    elif kind == "nag":
        hyper["gamma"] = cfg.gamma if cfg.gamma is not None else 0.5
    elif kind == "adam":
        hyper.update(beta1=cfg.beta1, paper_literal=cfg.paper_literal,
                     standard_bias_correction=cfg.standard_bias_correction)
    elif kind == "adadelta":
        hyper["paper_literal"] = cfg.paper_literal
    return make_rule(kind, **hyper)


def _make_step_rule(cfg: ExperimentConfig):
    if cfg.step == "golsi":
        return GolsiStep(reuse_f0=cfg.reuse_f0)
    return FixedStep(fixed_step(cfg.step, cfg.optimizer))


def run_training(cfg: ExperimentConfig, seed: int,
                 dataset: Dataset | None = None,
                 schema: DatasetSchema | None = None) -> RunLog:
    """One fully seeded training run following the standard protocol.

    Splits 2:1:1, standardizes on training statistics, initializes weights
    uniformly on [-0.1, 0.1] and iterates the configured algorithm,
    logging full-subset losses through the monitor. Non-finite losses are
    recorded and the run continues (divergence curves are data) unless
    ``halt_on_nonfinite`` is set.
    """
    cfg.validate()
    if dataset is None or schema is None:
        dataset, schema = load_dataset(cfg.dataset, cfg.manifest)
    split = split_2_1_1(dataset, SeededRng(seed, STREAM_SPLIT))
    ds_std = standardize(dataset, split.train)
    spec = build_mlp_spec(cfg, ds_std, schema)
    x0 = uniform_init(SeededRng(seed, STREAM_INIT), param_count(spec),
                      *INIT_RANGE)
    sampler = BatchSampler(cfg.batch_mode, split.train, cfg.batch,
                           SeededRng(seed, STREAM_SAMPLER))
    evaluator = MbssEvaluator(spec, ds_std, sampler)
    rule = _make_rule(cfg)
    step_rule = _make_step_rule(cfg)
    monitor = LossMonitor(spec, ds_std, split, cfg.log_every, cfg.iters)
    init_losses = monitor.compute(x0)

    x = x0
    state = IterationState()
    records = []
    halted = False
    for n in range(cfg.iters):
        x, rec = iterate(rule, x, evaluator, step_rule, state, n=n,
                         monitor=monitor)
        records.append(rec)
        if cfg.halt_on_nonfinite and not (math.isfinite(rec.train_loss)
                                          and math.isfinite(rec.alpha)):
            halted = True
            break
    return RunLog(seed=seed, records=records,
                  initial_train_loss=init_losses[0],
                  initial_val_loss=init_losses[1],
                  initial_test_loss=init_losses[2],
                  evaluator_total=evaluator.total_evals,
                  halted=halted)


@dataclass
class RepeatedResult:
    """Seed-averaged curves with min/max envelopes."""

    config: ExperimentConfig
    logs: list
    iters: np.ndarray
    mean: dict          # train/val/test/log10_alpha/cum_evals/direction_norm
    lo: dict            # envelope minima (losses, log10_alpha)
    hi: dict            # envelope maxima

    def summary(self) -> dict:
        per_run = [log.summary() for log in self.logs]
        out = {"tag": self.config.tag,
               "dataset": Path(self.config.dataset).stem,
               "optimizer": self.config.optimizer,
               "step": self.config.step,
               "runs": len(self.logs),
               "iterations": int(self.iters.size)}
        for key in ("initial_train_loss", "final_train_loss", "best_train_loss",
                    "final_val_loss", "final_test_loss", "mean_evals_per_iter",
                    "total_evals"):
            out[key] = float(np.mean([s[key] for s in per_run]))
        return out


def _stack(logs, attr):
    return np.array([[getattr(r, attr) for r in log.records] for log in logs])


def run_repeated(cfg: ExperimentConfig,
                 dataset: Dataset | None = None,
                 schema: DatasetSchema | None = None) -> RepeatedResult:
    """Run seeds seed..seed+runs-1 and aggregate mean and envelope curves."""
    cfg.validate()
    if dataset is None or schema is None:
        dataset, schema = load_dataset(cfg.dataset, cfg.manifest)
    logs = [run_training(cfg, cfg.seed + r, dataset, schema)
            for r in range(cfg.runs)]
    return aggregate_logs(cfg, logs)


def aggregate_logs(cfg: ExperimentConfig, logs) -> RepeatedResult:
    """Mean and min/max envelope curves over a set of run logs.

    Losses are averaged arithmetically; step sizes in log10 space. Halted
    runs truncate the aggregation to the shortest record list.
    """
    n_iters = min(len(log.records) for log in logs)
    trimmed = [replace_records(log, n_iters) for log in logs]

    losses = {key: _stack(trimmed, f"{key}_loss")
              for key in ("train", "val", "test")}
    alpha = _stack(trimmed, "alpha")
    with np.errstate(divide="ignore", invalid="ignore"):
        log_alpha = np.where(alpha > 0, np.log10(np.where(alpha > 0, alpha, 1.0)),
                             np.nan)
    cum = np.array([log.cumulative_evals[:n_iters] for log in trimmed],
                   dtype=np.float64)
    dnorm = _stack(trimmed, "direction_norm")

    mean = {k: v.mean(axis=0) for k, v in losses.items()}
    lo = {k: v.min(axis=0) for k, v in losses.items()}
    hi = {k: v.max(axis=0) for k, v in losses.items()}
    with np.errstate(invalid="ignore"):
        mean["log10_alpha"] = _nan_stat(np.nanmean, log_alpha)
        lo["log10_alpha"] = _nan_stat(np.nanmin, log_alpha)
        hi["log10_alpha"] = _nan_stat(np.nanmax, log_alpha)
    mean["cum_evals"] = cum.mean(axis=0)
    mean["direction_norm"] = dnorm.mean(axis=0)

    return RepeatedResult(config=cfg, logs=logs,
                          iters=np.arange(n_iters), mean=mean, lo=lo, hi=hi)


def _nan_stat(fn, arr):
    # all-NaN iteration columns stay NaN without RuntimeWarnings
    out = np.full(arr.shape[1], np.nan)
    valid = ~np.all(np.isnan(arr), axis=0)
    if np.any(valid):
        out[valid] = fn(arr[:, valid], axis=0)
    return out


def replace_records(log: RunLog, n: int) -> RunLog:
    if len(log.records) == n:
        return log
    return RunLog(seed=log.seed, records=log.records[:n],
                  initial_train_loss=log.initial_train_loss,
                  initial_val_loss=log.initial_val_loss,
                  initial_test_loss=log.initial_test_loss,
                  evaluator_total=log.evaluator_total, halted=log.halted)


CURVE_HEADER = ["iter", "cum_evals", "alpha", "train_loss", "val_loss",
                "test_loss", "direction_norm"]


def write_curve_csv(path, result: RepeatedResult) -> None:
    """Aggregated curve, one row per iteration under the pinned header.

    Losses are arithmetic means over runs; the step-size column is the
    geometric mean (the mean taken in log10 space).
    """
    mean = result.mean
    with np.errstate(invalid="ignore"):
        alpha = np.power(10.0, mean["log10_alpha"])
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for i in range(result.iters.size):
            writer.writerow([int(result.iters[i]),
                             repr(float(mean["cum_evals"][i])),
                             repr(float(alpha[i])),
                             repr(float(mean["train"][i])),
                             repr(float(mean["val"][i])),
                             repr(float(mean["test"][i])),
                             repr(float(mean["direction_norm"][i]))])


ENVELOPE_HEADER = ["iter", "train_min", "train_max", "val_min", "val_max",
                   "test_min", "test_max", "log10_alpha_min", "log10_alpha_max"]


def write_envelope_csv(path, result: RepeatedResult) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENVELOPE_HEADER)
        for i in range(result.iters.size):
            row = [int(result.iters[i])]
            for key in ("train", "val", "test", "log10_alpha"):
                row.append(repr(float(result.lo[key][i])))
                row.append(repr(float(result.hi[key][i])))
            writer.writerow(row)


def emit_outputs(results, out_dir, plots: bool = False) -> list[Path]:
    """Write curve/envelope CSVs per result plus one comparative summary.

    ``results`` is an iterable of RepeatedResult. Returns the written
    paths. With ``plots`` set, figures are rendered next to the CSVs.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    results = list(results)
    written = []
    for res in results:
        curve = out_dir / f"curve_{res.config.tag}.csv"
        envelope = out_dir / f"envelope_{res.config.tag}.csv"
        write_curve_csv(curve, res)
        write_envelope_csv(envelope, res)
        written += [curve, envelope]
    summary_path = out_dir / "summary.csv"
    rows = [res.summary() for res in results]
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[h] for h in header])
    written.append(summary_path)
    if plots:
        from . import plots as plotting
        written += plotting.render_training_figures(results, out_dir)
    return written


# ---------------------------------------------------------------------------
# Directional-scan experiments


@dataclass
class ScanConfig:
    """Scan-experiment settings; mirrors the scan CLI flags."""

    dataset: str
    manifest: str | None = None
    grid_start: float = 0.0
    grid_step: float = 0.002
    grid_count: int = 101
    batch_sizes: tuple = (10, 38, 76)
    batch_mode: str = "dynamic"
    runs: int = 500
    seed: int = 0
    hidden_nodes: int = 10
    loss: str = "mse"
    activation: str = "sigmoid"
    reference: str | None = None
    out: str | None = None

    def validate(self):
        if self.grid_count < 2:
            raise ValueError("grid_count must be >= 2")
        if self.grid_step <= 0:
            raise ValueError("grid_step must be positive")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.batch_sizes:
            raise ValueError("need at least one batch size")

    @property
    def grid(self) -> np.ndarray:
        return self.grid_start + self.grid_step * np.arange(self.grid_count)


@dataclass
class ScanProblem:
    """Reference point and direction a scan experiment probes along."""

    spec: MlpSpec
    dataset: Dataset
    train_indices: np.ndarray
    x_ref: np.ndarray
    d_ref: np.ndarray


@dataclass
class ScanExperimentResult:
    config: ScanConfig
    problem: ScanProblem
    pdfs: dict  # batch size -> (PdfEstimate snngpp, PdfEstimate local min)

    def support_width(self, batch_size: int) -> float:
        return self.pdfs[batch_size][0].support_width


def write_reference_ray(path, x_ref, d_ref) -> None:
    """Persist a reference (weights, direction) pair as two CSV columns."""
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "d"])
        for xi, di in zip(x_ref, d_ref):
            writer.writerow([repr(float(xi)), repr(float(di))])


def load_reference_ray(path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "d"]:
            raise ValueError(f"{path}: expected header 'x,d'")
        for row in reader:
            if row:
                rows.append((float(row[0]), float(row[1])))
    if not rows:
        raise ValueError(f"{path}: empty reference ray")
    arr = np.asarray(rows, dtype=np.float64)
    return arr[:, 0], arr[:, 1]


def reference_scan_problem(dataset: Dataset, split_seed: int = 0,
                           hidden_nodes: int = 10, loss: str = "mse",
                           activation: str = "sigmoid",
                           reference: str | None = None) -> ScanProblem:
    """Standardized training subset plus the reference ray to scan along.

    With a bundled reference file the stored (weights, direction) pair is
    used verbatim; otherwise the weights come from the pinned fallback
    seed and the direction is the full-batch steepest-descent direction
    from them.
    """
    split = split_2_1_1(dataset, SeededRng(split_seed, STREAM_SPLIT))
    ds_std = standardize(dataset, split.train)
    spec = MlpSpec(layer_sizes=(ds_std.d, hidden_nodes, ds_std.k),
                   hidden_activation=activation, output_head=loss)
    if reference is not None:
        x_ref, d_ref = load_reference_ray(reference)
        if x_ref.shape != (param_count(spec),):
            raise ValueError(f"reference ray has {x_ref.size} entries; the "
                             f"configured network needs {param_count(spec)}")
    else:
        x_ref = uniform_init(SeededRng(REFERENCE_WEIGHTS_SEED, STREAM_INIT),
                             param_count(spec), *INIT_RANGE)
        feats, targets = ds_std.batch(split.train)
        d_ref = -backprop_gradient(spec, x_ref, feats, targets).gradient
    return ScanProblem(spec=spec, dataset=ds_std, train_indices=split.train,
                       x_ref=x_ref, d_ref=d_ref)


def run_scan_experiment(cfg: ScanConfig,
                        dataset: Dataset | None = None,
                        schema: DatasetSchema | None = None) -> ScanExperimentResult:
    """Repeated directional scans per batch size, aggregated into PDFs.

    A requested batch size covering the whole training pool runs in
    full-batch mode (deterministic scans); smaller sizes use the
    configured dynamic regime, one independent sampler stream per
    (batch size, run).
    """
    cfg.validate()
    if dataset is None:
        dataset, schema = load_dataset(cfg.dataset, cfg.manifest)
    problem = reference_scan_problem(dataset, split_seed=cfg.seed,
                                     hidden_nodes=cfg.hidden_nodes,
                                     loss=cfg.loss, activation=cfg.activation,
                                     reference=cfg.reference)
    grid = cfg.grid
    pool = problem.train_indices
    pdfs = {}
    for bi, b in enumerate(cfg.batch_sizes):
        snn_events, min_events = [], []
        for r in range(cfg.runs):
            mode = FULL if b >= pool.size else cfg.batch_mode
            stream = STREAM_SCAN_BASE + bi * cfg.runs + r
            sampler = BatchSampler(mode, pool, b, SeededRng(cfg.seed, stream))
            evaluator = MbssEvaluator(problem.spec, problem.dataset, sampler)
            lf = LineFunction(problem.x_ref, problem.d_ref, evaluator)
            scan = scan_line(lf, grid)
            snn_events.append(scan.snngpp_events)
            min_events.append(scan.local_min_events)
        pdfs[b] = (estimate_pdf(snn_events, grid),
                   estimate_pdf(min_events, grid))
    return ScanExperimentResult(config=cfg, problem=problem, pdfs=pdfs)


def emit_scan_outputs(result: ScanExperimentResult, out_dir,
                      plots: bool = False) -> list[Path]:
    """Per-batch-size PDF CSVs plus a support-width summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    grid = result.config.grid
    for b, (pdf_snn, pdf_min) in result.pdfs.items():
        path = out_dir / f"scan_pdf_b{b}.csv"
        write_pdf_csv(path, grid, pdf_snn, pdf_min)
        written.append(path)
    summary = out_dir / "scan_summary.csv"
    with open(summary, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch_size", "snngpp_support_lo", "snngpp_support_hi",
                         "snngpp_support_width", "snngpp_occupied_fraction",
                         "localmin_occupied_fraction"])
        for b, (pdf_snn, pdf_min) in result.pdfs.items():
            sup = pdf_snn.support or (math.nan, math.nan)
            writer.writerow([b, repr(sup[0]), repr(sup[1]),
                             repr(pdf_snn.support_width),
                             repr(pdf_snn.occupied_fraction),
                             repr(pdf_min.occupied_fraction)])
    written.append(summary)
    if plots:
        from . import plots as plotting
        written.append(plotting.render_scan_figure(result, out_dir))
    return written
