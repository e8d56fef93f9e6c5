"""Dataset loading, splitting, standardization, and synthetic data generation."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

CACHE_MAGIC = b"CAFE"
CACHE_VERSION = 1


class DataError(ValueError):
    """An input file or matrix violates the loader's contract."""


@dataclass
class DatasetMatrix:
    """Dense feature matrix with binary labels and feature names."""

    values: np.ndarray        # (n, m) float64
    labels: np.ndarray        # (n,) int64, entries in {0, 1}
    feature_names: list[str]

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        if self.labels.shape != (self.values.shape[0],):
            raise DataError("labels length must match row count")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise DataError("non-binary label")
        if not np.all(np.isfinite(self.values)):
            raise DataError("values contain NaN/Inf after ingestion")
        if len(self.feature_names) != self.values.shape[1]:
            raise DataError("feature_names length must match feature count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("duplicate feature names")
        # shared read-only across workers
        self.values.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def features(self) -> int:
        return self.values.shape[1]

    def take_rows(self, indices) -> "DatasetMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return DatasetMatrix(self.values[idx], self.labels[idx], list(self.feature_names))

    def take_features(self, indices) -> "DatasetMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        names = [self.feature_names[int(j)] for j in idx]
        return DatasetMatrix(self.values[:, idx], self.labels, names)


@dataclass(frozen=True)
class SplitSpec:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    test_fraction: float


@dataclass(frozen=True)
class StandardScaler:
    """Per-feature centering/scaling fitted on training rows only."""

    means: np.ndarray
    scales: np.ndarray

    def transform(self, ds: DatasetMatrix) -> DatasetMatrix:
        if ds.features != self.means.shape[0]:
            raise DataError("scaler dimension mismatch")
        out = (ds.values - self.means) / self.scales
        return DatasetMatrix(out, ds.labels, list(ds.feature_names))


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    m: int
    d_informative: int
    seed: int
    label_noise: float = 0.0
    duplicate_pairs: int = 0

    def validate(self):
        if self.n < 1 or self.m < 1:
            raise DataError("n and m must be positive")
        if not 0 < self.d_informative <= self.m:
            raise DataError("d_informative must be in [1, m]")
        if not 0.0 <= self.label_noise < 0.5:
            raise DataError("label_noise must be in [0, 0.5)")
        if self.duplicate_pairs < 0 or self.duplicate_pairs > self.m - self.d_informative:
            raise DataError("duplicate_pairs must be in [0, m - d_informative]")
        spare = self.m - self.d_informative - self.duplicate_pairs
        if self.duplicate_pairs > 0 and spare < 1:
            raise DataError("duplicate_pairs leaves no non-informative source column")


def _parse_cell(text: str, row: int, col: str) -> float:
    if text == "":
        return np.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"unparseable cell at row {row}, column '{col}': {text!r}") from None


def load_csv(path, label_column: str = "label") -> DatasetMatrix:
    """Load a UTF-8 comma-separated file; empty cells are imputed with the
    per-feature median of present values."""
    ds, _ = load_csv_with_mask(path, label_column)
    return ds


def load_csv_with_mask(path, label_column: str = "label"):
    """Like load_csv, but also returns the boolean missing-cell mask so a
    pipeline can re-impute from training rows after splitting."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        if label_column not in header:
            raise DataError(f"missing label column '{label_column}'")
        label_idx = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != label_idx]

        rows, labels = [], []
        for r, rec in enumerate(reader):
            if len(rec) != len(header):
                raise DataError(f"row {r} has {len(rec)} cells, expected {len(header)}")
            lab = _parse_cell(rec[label_idx], r, label_column)
            if lab not in (0.0, 1.0):
                raise DataError(f"non-binary label at row {r}: {rec[label_idx]!r}")
            labels.append(int(lab))
            rows.append([_parse_cell(c, r, header[i])
                         for i, c in enumerate(rec) if i != label_idx])

    if not rows:
        raise DataError(f"no data rows in {path}")
    values = np.asarray(rows, dtype=np.float64)
    mask = np.isnan(values)
    values = _impute_median(values, mask, np.arange(values.shape[0]))
    ds = DatasetMatrix(values, np.asarray(labels), names)
    return ds, mask


def _impute_median(values: np.ndarray, mask: np.ndarray, rows: np.ndarray) -> np.ndarray:
    out = values.copy()
    for j in np.flatnonzero(mask.any(axis=0)):
        col = values[rows, j]
        present = col[~np.isnan(col)]
        if present.size == 0:
            raise DataError(f"column {j} has no present value to impute from")
        out[mask[:, j], j] = float(np.median(present))
    return out


def reimpute(ds: DatasetMatrix, mask: np.ndarray, train_rows) -> DatasetMatrix:
    """Re-fill originally missing cells with medians taken over train_rows only."""
    if mask.shape != ds.values.shape:
        raise DataError("mask shape mismatch")
    if not mask.any():
        return ds
    train_rows = np.asarray(train_rows, dtype=np.int64)
    raw = ds.values.copy()
    raw[mask] = np.nan
    values = _impute_median(raw, mask, train_rows)
    return DatasetMatrix(values, ds.labels, list(ds.feature_names))


def save_csv(ds: DatasetMatrix, path, label_column: str = "label") -> None:
    """Write a CSV that load_csv reproduces bit-exactly (repr round-trip)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.feature_names + [label_column])
        for i in range(ds.rows):
            writer.writerow([repr(float(v)) for v in ds.values[i]] + [int(ds.labels[i])])


def save_cache(ds: DatasetMatrix, path) -> None:
    """Binary columnar cache: magic 'CAFE', version byte, LE 64-bit dims,
    names block, label block, then column-major float64 feature blocks."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<B", CACHE_VERSION))
        fh.write(struct.pack("<QQ", ds.rows, ds.features))
        names_blob = "\n".join(ds.feature_names).encode("utf-8")
        fh.write(struct.pack("<Q", len(names_blob)))
        fh.write(names_blob)
        fh.write(ds.labels.astype("<u1").tobytes())
        fh.write(np.asfortranarray(ds.values).astype("<f8").tobytes(order="F"))


def load_cache(path) -> DatasetMatrix:
    with open(path, "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            raise DataError(f"not a columnar cache file: {path}")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != CACHE_VERSION:
            raise DataError(f"unsupported cache version {version}")
        n, m = struct.unpack("<QQ", fh.read(16))
        (name_len,) = struct.unpack("<Q", fh.read(8))
        names = fh.read(name_len).decode("utf-8").split("\n") if name_len else []
        labels = np.frombuffer(fh.read(n), dtype="<u1").astype(np.int64)
        values = np.frombuffer(fh.read(n * m * 8), dtype="<f8").reshape((n, m), order="F")
    return DatasetMatrix(np.ascontiguousarray(values), labels, names)


def stratified_split(ds: DatasetMatrix, test_fraction: float, seed: int) -> SplitSpec:
    """Per class, shuffle row indices with a seeded generator and send the
    first floor(test_fraction * class_count) to the test side."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    classes = np.unique(ds.labels)
    if classes.size < 2:
        raise DataError("single-class dataset cannot be stratified")
    rng = np.random.default_rng(seed)
    test_parts, train_parts = [], []
    for c in classes:
        idx = np.flatnonzero(ds.labels == c)
        shuffled = idx[rng.permutation(idx.size)]
        k = int(np.floor(test_fraction * idx.size))
        test_parts.append(shuffled[:k])
        train_parts.append(shuffled[k:])
    return SplitSpec(
        train_indices=np.sort(np.concatenate(train_parts)),
        test_indices=np.sort(np.concatenate(test_parts)),
        seed=seed,
        test_fraction=test_fraction,
    )


def fit_scaler(ds: DatasetMatrix, indices) -> StandardScaler:
    """Means and population standard deviations over the indexed rows;
    zero-variance features get scale 1 so standardization stays total."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise DataError("cannot fit a scaler on an empty index set")
    sub = ds.values[idx]
    means = sub.mean(axis=0)
    scales = sub.std(axis=0)  # population (divide-by-n) convention
    scales = np.where(scales > 0.0, scales, 1.0)
    return StandardScaler(means=means, scales=scales)


def generate_synthetic(spec: SyntheticSpec):
    """Planted-signal generator used as the recovery oracle.

    Features are i.i.d. standard normal; labels are Bernoulli(sigmoid(w.x))
    with nonzero weights only on d_informative randomly chosen features
    (magnitudes uniform in [0.5, 2.0], random signs), flipped with
    probability label_noise. duplicate_pairs non-informative columns are
    overwritten with exact copies of other non-informative columns.
    Returns (DatasetMatrix, planted informative index set).
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    X = rng.standard_normal((spec.n, spec.m))
    informative = np.sort(rng.choice(spec.m, size=spec.d_informative, replace=False))
    magnitudes = rng.uniform(0.5, 2.0, size=spec.d_informative)
    signs = rng.choice([-1.0, 1.0], size=spec.d_informative)
    w = np.zeros(spec.m)
    w[informative] = magnitudes * signs
    proba = 1.0 / (1.0 + np.exp(-(X @ w)))
    y = (rng.random(spec.n) < proba).astype(np.int64)
    if spec.label_noise > 0.0:
        flips = rng.random(spec.n) < spec.label_noise
        y = np.where(flips, 1 - y, y)
    if spec.duplicate_pairs > 0:
        non_informative = np.setdiff1d(np.arange(spec.m), informative)
        targets = rng.choice(non_informative, size=spec.duplicate_pairs, replace=False)
        sources_pool = np.setdiff1d(non_informative, targets)
        sources = rng.choice(sources_pool, size=spec.duplicate_pairs, replace=True)
        for src, dst in zip(sources, targets):
            X[:, dst] = X[:, src]
    names = [f"F{j + 1}" for j in range(spec.m)]
    return DatasetMatrix(X, y, names), set(int(j) for j in informative)
