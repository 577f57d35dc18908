"""Dataset ingestion, splitting, standardization and mini-batch sampling.

Datasets are ingested from a single CSV format (header ``f1..fD,label``
with integer labels in [0, K)) accompanied by a plain key/value manifest.
Splitting follows a 2:1:1 train/validation/test ratio with remainders
assigned to the training set. Three batch regimes are provided: the full
training pool, a fixed partition cycled block by block, and two dynamic
regimes that redraw the batch on every evaluation (uniform with
replacement, or epoch-wise shuffling without replacement).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SeededRng

FULL = "full"
STATIC = "static"
DYNAMIC_REPLACEMENT = "dynamic_with_replacement"
EPOCH_SHUFFLE = "dynamic_epoch_shuffle"

_MODE_ALIASES = {
    "full": FULL,
    "static": STATIC,
    "dynamic": DYNAMIC_REPLACEMENT,
    "dynamic_with_replacement": DYNAMIC_REPLACEMENT,
    "epoch": EPOCH_SHUFFLE,
    "dynamic_epoch_shuffle": EPOCH_SHUFFLE,
}


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    target: np.ndarray  # one-hot


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray  # (M, D)
    labels: np.ndarray    # (M,) ints in [0, K)
    n_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be (M, D)")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match feature rows")
        if self.labels.size and (self.labels.min() < 0
                                 or self.labels.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")
        if self.m < 4:
            raise ValueError("need at least 4 samples for a 2:1:1 split")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)
        onehot = np.zeros((self.m, self.n_classes))
        onehot[np.arange(self.m), self.labels] = 1.0
        onehot.setflags(write=False)
        object.__setattr__(self, "_targets", onehot)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def k(self) -> int:
        return self.n_classes

    @property
    def targets(self) -> np.ndarray:
        """One-hot (M, K) targets."""
        return self._targets

    def batch(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """(features, one-hot targets) for the given row indices."""
        idx = np.asarray(indices, dtype=np.intp)
        return self.features[idx], self._targets[idx]

    def sample(self, i: int) -> Sample:
        x, t = self.batch([i])
        return Sample(features=x[0], target=t[0])


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class DatasetSchema:
    """Manifest contents describing one prepared dataset."""

    name: str
    n_features: int
    n_classes: int
    m: int | None = None
    hidden_nodes_override: int | None = None


def load_csv_dataset(path, schema: DatasetSchema) -> Dataset:
    """Read a prepared CSV into a Dataset, preserving row order.

    Raises on empty files, malformed rows (with the offending file line
    number) and labels outside [0, K).
    """
    path = Path(path)
    features = []
    labels = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty dataset file")
        expected = [f"f{i + 1}" for i in range(schema.n_features)] + ["label"]
        if [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: header {header} does not match {expected}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != schema.n_features + 1:
                raise ValueError(f"{path}: line {line_no}: expected "
                                 f"{schema.n_features + 1} fields, got {len(row)}")
            try:
                feats = [float(v) for v in row[:-1]]
                label = int(row[-1])
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from None
            if not 0 <= label < schema.n_classes:
                raise ValueError(f"{path}: line {line_no}: label {label} outside "
                                 f"[0, {schema.n_classes})")
            features.append(feats)
            labels.append(label)
    if not features:
        raise ValueError(f"{path}: no data rows")
    return Dataset(name=schema.name,
                   features=np.asarray(features, dtype=np.float64),
                   labels=np.asarray(labels, dtype=np.intp),
                   n_classes=schema.n_classes)


def write_csv_dataset(path, dataset: Dataset) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i + 1}" for i in range(dataset.d)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_manifest(path) -> DatasetSchema:
    """Parse a key/value manifest (name, d, k, m, hidden_nodes_override)."""
    path = Path(path)
    values = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {line_no}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip().lower()] = val.strip()
    try:
        schema = DatasetSchema(
            name=values["name"],
            n_features=int(values["d"]),
            n_classes=int(values["k"]),
            m=int(values["m"]) if "m" in values else None,
            hidden_nodes_override=(int(values["hidden_nodes_override"])
                                   if "hidden_nodes_override" in values else None),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing manifest key {exc}") from None
    return schema


def write_manifest(path, schema: DatasetSchema) -> None:
    lines = [f"name = {schema.name}", f"d = {schema.n_features}",
             f"k = {schema.n_classes}"]
    if schema.m is not None:
        lines.append(f"m = {schema.m}")
    if schema.hidden_nodes_override is not None:
        lines.append(f"hidden_nodes_override = {schema.hidden_nodes_override}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def manifest_path_for(csv_path) -> Path:
    return Path(csv_path).with_suffix(".manifest")


def load_dataset(csv_path, manifest_path=None) -> tuple[Dataset, DatasetSchema]:
    """Load a dataset CSV with its manifest (defaults to <stem>.manifest)."""
    csv_path = Path(csv_path)
    manifest_path = Path(manifest_path) if manifest_path else manifest_path_for(csv_path)
    schema = read_manifest(manifest_path)
    ds = load_csv_dataset(csv_path, schema)
    if schema.m is not None and ds.m != schema.m:
        raise ValueError(f"{csv_path}: manifest says m={schema.m}, file has {ds.m}")
    return ds, schema


def split_2_1_1(dataset: Dataset, rng: SeededRng) -> Split:
    """Random 2:1:1 split; rounding remainders go to the training set."""
    m = dataset.m
    perm = rng.permutation(m)
    quarter = m // 4
    train = perm[: m - 2 * quarter]
    validation = perm[m - 2 * quarter : m - quarter]
    test = perm[m - quarter :]
    return Split(train=train, validation=validation, test=test)


def standardize(dataset: Dataset, stats_from) -> Dataset:
    """Shift/scale every feature column to zero mean, unit variance.

    Statistics come exclusively from the ``stats_from`` rows (the training
    indices), so no information leaks from validation or test rows.
    Zero-variance columns are shifted but left unscaled.
    """
    idx = np.asarray(stats_from, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("stats_from must be non-empty")
    ref = dataset.features[idx]
    mean = ref.mean(axis=0)
    std = ref.std(axis=0)  # population convention (ddof=0)
    scale = np.where(std > 0, std, 1.0)
    feats = (dataset.features - mean) / scale
    return Dataset(name=dataset.name, features=feats,
                   labels=dataset.labels.copy(), n_classes=dataset.n_classes)


def normalize_batch_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown batch mode {mode!r}; choose from "
                         f"{sorted(set(_MODE_ALIASES))}") from None


class BatchSampler:
    """Emits index batches from a fixed pool under one of four regimes.

    full: the whole pool, every call.
    static: a seeded partition fixed at construction; call i returns
        block (i mod n_blocks).
    dynamic_with_replacement: every call draws batch_size indices
        uniformly with replacement.
    dynamic_epoch_shuffle: draws without replacement until the pool is
        exhausted (the final batch of an epoch may be short), then
        reshuffles and repeats.
    """

    def __init__(self, mode: str, pool, batch_size: int, rng: SeededRng):
        self.mode = normalize_batch_mode(mode)
        self.pool = np.asarray(pool, dtype=np.intp)
        if self.pool.ndim != 1 or self.pool.size == 0:
            raise ValueError("pool must be a non-empty 1-D index array")
        self.batch_size = int(batch_size)
        self.rng = rng
        self.calls = 0
        if self.mode != FULL and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.mode in (STATIC, EPOCH_SHUFFLE) and self.batch_size > self.pool.size:
            raise ValueError(f"batch_size {self.batch_size} exceeds pool size "
                             f"{self.pool.size} for mode {self.mode}")
        if self.mode == STATIC:
            shuffled = self.pool[rng.permutation(self.pool.size)]
            n_blocks = int(np.ceil(self.pool.size / self.batch_size))
            self._blocks = [shuffled[i * self.batch_size : (i + 1) * self.batch_size]
                            for i in range(n_blocks)]
        elif self.mode == EPOCH_SHUFFLE:
            self._order = self.pool[rng.permutation(self.pool.size)]
            self._cursor = 0

    def next_batch(self) -> np.ndarray:
        """Index list for the next evaluation; advances sampler state."""
        i = self.calls
        self.calls += 1
        if self.mode == FULL:
            return self.pool.copy()
        if self.mode == STATIC:
            return self._blocks[i % len(self._blocks)].copy()
        if self.mode == DYNAMIC_REPLACEMENT:
            picks = self.rng.integers(self.pool.size, size=self.batch_size)
            return self.pool[picks]
        # epoch shuffle
        if self._cursor >= self._order.size:
            self._order = self.pool[self.rng.permutation(self.pool.size)]
            self._cursor = 0
        batch = self._order[self._cursor : self._cursor + self.batch_size]
        self._cursor += batch.size
        return batch.copy()
