"""Feature datasets: CSV I/O, synthetic blobs, splits and metrics.

CSV layout: header ``f0,...,f{d-1},label`` followed by one sample per line.
Labels are non-negative integers; they are remapped to ``0..C-1`` in sorted
order on load, and the original ids (or supplied names) become
``class_names``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

# class ids of the three-class weld subset
WELD_CLASSES = {0: "Good weld", 2: "Contamination", 3: "Lack of fusion"}
PAPER_FEATURE_SIZES = (7, 15, 31, 63, 127)


class CsvFormatError(ValueError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class FeatureDataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels).astype(np.int64).ravel()
        if X.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        names = tuple(str(n) for n in self.class_names)
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise ValueError(f"labels must lie in [0, {len(names)})")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def subset(self, idx) -> "FeatureDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureDataset(self.features[idx], self.labels[idx], self.class_names)

    def truncate(self, d: int) -> "FeatureDataset":
        if d > self.d:
            raise ValueError(f"cannot take {d} columns from a {self.d}-feature dataset")
        return FeatureDataset(self.features[:, :d], self.labels, self.class_names)


def load_csv(path, label_names: Optional[Mapping[int, str]] = None) -> FeatureDataset:
    """Parse a feature CSV.

    With ``label_names`` every label must be one of its keys; the dataset's
    classes are then exactly those keys in sorted order.
    """
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text, newline="")))
    rows = [r for r in rows if r]
    if not rows:
        raise CsvFormatError("file is empty")
    header = [h.strip() for h in rows[0]]
    if not header or header[-1] != "label":
        raise CsvFormatError("header must end with a 'label' column", row=1)
    d = len(header) - 1
    for j, name in enumerate(header[:-1]):
        if name != f"f{j}":
            raise CsvFormatError(f"expected header f{j}, found {name!r}", row=1, column=j + 1)
    if len(rows) < 2:
        raise CsvFormatError("no samples after the header")

    X = np.empty((len(rows) - 1, d))
    raw = np.empty(len(rows) - 1, dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if len(row) != d + 1:
            raise CsvFormatError(f"expected {d + 1} cells, found {len(row)}", row=lineno)
        for j, cell in enumerate(row[:-1]):
            try:
                X[i, j] = float(cell)
            except ValueError:
                raise CsvFormatError(f"non-numeric value {cell!r}", lineno, j + 1) from None
            if not np.isfinite(X[i, j]):
                raise CsvFormatError(f"non-finite value {cell!r}", lineno, j + 1)
        cell = row[-1].strip()
        if not cell.isdigit():
            raise CsvFormatError(f"label {cell!r} is not a non-negative integer", lineno, d + 1)
        raw[i] = int(cell)
        if label_names is not None and raw[i] not in label_names:
            raise CsvFormatError(
                f"label {raw[i]} is not one of the {len(label_names)} declared classes",
                lineno,
                d + 1,
            )

    ids = sorted(label_names) if label_names is not None else sorted(set(raw.tolist()))
    remap = {old: new for new, old in enumerate(ids)}
    labels = np.array([remap[v] for v in raw.tolist()], dtype=np.int64)
    names = [label_names[i] for i in ids] if label_names is not None else [str(i) for i in ids]
    return FeatureDataset(X, labels, tuple(names))


def save_csv(ds: FeatureDataset, path) -> None:
    """Write ``ds``; floats use ``repr`` so a reload reproduces them bit for bit."""
    lines = [",".join([f"f{j}" for j in range(ds.d)] + ["label"])]
    for x, label in zip(ds.features, ds.labels):
        lines.append(",".join([repr(float(v)) for v in x] + [str(int(label))]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def blob_centers(d: int, num_classes: int, separation: float) -> np.ndarray:
    # scaled basis vectors: every pair is exactly `separation` apart
    return separation / np.sqrt(2.0) * np.eye(num_classes, d)


def synth_blobs(
    n_per_class: int, d: int, num_classes: int = 2, separation: float = 10.0, seed: int = 42
) -> FeatureDataset:
    """Unit-variance isotropic Gaussian clusters around equidistant centres."""
    if n_per_class < 1 or d < 2 or num_classes < 2 or not separation > 0:
        raise ValueError("need n_per_class >= 1, d >= 2, num_classes >= 2, separation > 0")
    if num_classes > d:
        raise ValueError(f"{num_classes} equidistant centres need d >= {num_classes}")
    rng = np.random.default_rng(seed)
    centers = blob_centers(d, num_classes, separation)
    labels = np.repeat(np.arange(num_classes), n_per_class)
    X = centers[labels] + rng.normal(size=(labels.size, d))
    order = rng.permutation(labels.size)
    return FeatureDataset(X[order], labels[order], tuple(str(c) for c in range(num_classes)))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def _largest_remainder(shares, total: int) -> np.ndarray:
    """Integer quotas summing to ``total``, each within one of its share."""
    base = np.floor(shares).astype(np.int64)
    extra = min(max(total - int(base.sum()), 0), len(shares))
    # stable sort: equal remainders go to the lower class index first
    order = np.argsort(-(shares - base), kind="stable")
    base[order[:extra]] += 1
    return base


def split(ds: FeatureDataset, spec: SplitSpec = SplitSpec()) -> tuple:
    """Seeded ``(train, test)`` partition; both keep the original row order."""
    rng = np.random.default_rng(spec.seed)
    train_idx = []
    if spec.stratified:
        members = [np.flatnonzero(ds.labels == c) for c in range(ds.num_classes)]
        sizes = np.array([m.size for m in members])
        quota = _largest_remainder(spec.train_fraction * sizes, int(round(spec.train_fraction * ds.n)))
        for c, (m, k) in enumerate(zip(members, quota)):
            if m.size == 0:
                continue
            if k == 0 or k == m.size:
                raise ValueError(
                    f"class {ds.class_names[c]!r} ({m.size} samples) cannot be split "
                    f"with train_fraction {spec.train_fraction}"
                )
            train_idx.append(rng.permutation(m)[:k])
        train_idx = np.concatenate(train_idx)
    else:
        k = int(round(spec.train_fraction * ds.n))
        if k == 0 or k == ds.n:
            raise ValueError(f"train_fraction {spec.train_fraction} leaves a split empty")
        train_idx = rng.permutation(ds.n)[:k]
    mask = np.zeros(ds.n, dtype=bool)
    mask[train_idx] = True
    return ds.subset(np.flatnonzero(mask)), ds.subset(np.flatnonzero(~mask))


def metrics(predictions, labels, num_classes: int) -> dict:
    """Accuracy and ``confusion[true][predicted]`` counts."""
    p = np.asarray(predictions).astype(np.int64).ravel()
    t = np.asarray(labels).astype(np.int64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"{p.size} predictions for {t.size} labels")
    if t.size == 0:
        raise ValueError("empty dataset")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)
    return {"accuracy": float(np.mean(p == t)), "confusion": confusion.tolist()}
