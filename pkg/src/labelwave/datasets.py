"""Synthetic Gaussian mixtures and CSV datasets, with split bookkeeping."""

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, Optional

import numpy as np

from labelwave.errors import ConfigError, DataError, ParseError
from labelwave.noise import apply_noise, save_noisy_labels

SplitTag = Literal["train", "test", "holdout"]


@dataclass(frozen=True)
class NoisyDataset:
    features: np.ndarray
    observed_labels: np.ndarray
    num_classes: int
    true_labels: Optional[np.ndarray] = None
    split: SplitTag = "train"
    label_mapping: Optional[dict] = None  # original label value -> class index
    standardization: Optional[tuple] = None  # (column means, column stds)
    indices: Optional[np.ndarray] = field(default=None, repr=False)  # rows of the parent pool

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.observed_labels, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] != y.size:
            raise ConfigError(f"features {x.shape} do not match {y.size} labels")
        if not np.all(np.isfinite(x)):
            raise DataError("dataset features must be finite")
        for name, lab in (("observed", y), ("true", self.true_labels)):
            if lab is not None and np.size(lab) and (np.min(lab) < 0 or np.max(lab) >= self.num_classes):
                raise ConfigError(f"{name} labels must lie in [0, {self.num_classes})")
        if self.true_labels is not None:
            t = np.asarray(self.true_labels, dtype=np.int64)
            if t.shape != y.shape:
                raise ConfigError("true_labels and observed_labels differ in length")
            object.__setattr__(self, "true_labels", t)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "observed_labels", y)
        if self.indices is None:
            object.__setattr__(self, "indices", np.arange(y.size))

    def __len__(self):
        return self.observed_labels.size

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def clean_mask(self):
        if self.true_labels is None:
            return None
        return self.observed_labels == self.true_labels

    @property
    def mislabeled_mask(self):
        mask = self.clean_mask
        return None if mask is None else ~mask

    def subset(self, idx, split=None):
        idx = np.asarray(idx, dtype=np.int64)
        return replace(
            self,
            features=self.features[idx],
            observed_labels=self.observed_labels[idx],
            true_labels=None if self.true_labels is None else self.true_labels[idx],
            split=split or self.split,
            indices=self.indices[idx],
        )

    def with_noise(self, spec):
        """Corrupt the labels; the current observed labels become ground truth if none is set."""
        truth = self.observed_labels if self.true_labels is None else self.true_labels
        noisy, report = apply_noise(self.features, truth, self.num_classes, spec)
        return replace(self, observed_labels=noisy, true_labels=truth.copy()), report

    def with_labels(self, labels):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size != len(self):
            raise ConfigError(f"got {labels.size} labels for a dataset of {len(self)}")
        truth = self.observed_labels if self.true_labels is None else self.true_labels
        return replace(self, observed_labels=labels, true_labels=truth.copy())


@dataclass(frozen=True)
class MixtureConfig:
    num_classes: int = 10
    dim: int = 20
    n_train: int = 5000
    n_test: int = 2000
    separation: float = 3.5
    cluster_std: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class SplitSpec:
    holdout_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.holdout_fraction < 1:
            raise ConfigError(f"holdout_fraction must be in [0, 1), got {self.holdout_fraction}")


def mixture_means(num_classes, dim, separation, rng):
    directions = rng.standard_normal((num_classes, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return separation * directions


def sample_mixture(means, n, cluster_std, rng):
    num_classes, dim = means.shape
    labels = rng.permutation(np.arange(n) % num_classes)
    x = means[labels] + cluster_std * rng.standard_normal((n, dim))
    return x, labels


def gen_gaussian_mixture(num_classes, n, dim, separation=2.0, cluster_std=1.0, seed=0):
    """Clean isotropic Gaussian mixture with balanced classes (counts differ by <= 1)."""
    if num_classes < 2 or n < num_classes or dim < 2:
        raise ConfigError(f"need C >= 2, n >= C, d >= 2; got C={num_classes}, n={n}, d={dim}")
    rng = np.random.default_rng(seed)
    means = mixture_means(num_classes, dim, separation, rng)
    x, y = sample_mixture(means, n, cluster_std, rng)
    return NoisyDataset(x, y, num_classes, true_labels=y.copy())


def make_train_test(cfg):
    """Train and test draws from one mixture (shared class means)."""
    if cfg.num_classes < 2 or min(cfg.n_train, cfg.n_test) < cfg.num_classes or cfg.dim < 2:
        raise ConfigError(f"invalid mixture configuration {cfg}")
    root = np.random.default_rng(cfg.seed)
    means = mixture_means(cfg.num_classes, cfg.dim, cfg.separation, root)
    train_rng, test_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    xtr, ytr = sample_mixture(means, cfg.n_train, cfg.cluster_std, train_rng)
    xte, yte = sample_mixture(means, cfg.n_test, cfg.cluster_std, test_rng)
    train = NoisyDataset(xtr, ytr, cfg.num_classes, true_labels=ytr.copy(), split="train")
    test = NoisyDataset(xte, yte, cfg.num_classes, true_labels=yte.copy(), split="test")
    return train, test


def holdout_size(n, fraction):
    # round half up
    return int(np.floor(n * fraction + 0.5))


def split(dataset, spec):
    """Seeded disjoint (train, holdout) partition; holdout keeps the noisy labels."""
    if not isinstance(spec, SplitSpec):
        spec = SplitSpec(*spec) if isinstance(spec, tuple) else SplitSpec(spec)
    n = len(dataset)
    m = holdout_size(n, spec.holdout_fraction)
    perm = np.random.default_rng(spec.seed).permutation(n)
    hold_idx = np.sort(perm[:m])
    train_idx = np.sort(perm[m:])
    return dataset.subset(train_idx, "train"), dataset.subset(hold_idx, "holdout")


def _read_rows(path):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read CSV {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError(f"{path}: empty CSV", line=1)
    return rows[0], rows[1:]


def _label_key(value):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def load_csv(path, label_column="label", reference=None, split_tag=None):
    """Load a headed numeric CSV.

    Without ``reference`` the file is treated as the training split: column
    statistics and the label mapping are computed from it. Passing the training
    dataset as ``reference`` reuses its statistics and mapping (test/holdout).
    """
    header, body = _read_rows(path)
    header = [h.strip() for h in header]
    if label_column not in header:
        raise ConfigError(f"{path}: label column {label_column!r} not in header {header}")
    li = header.index(label_column)
    feats, raw_labels = [], []
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} cells, got {len(row)}", line=r)
        vals = []
        for c, cell in enumerate(row, start=1):
            if c - 1 == li:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell!r}", line=r, column=c) from None
        feats.append(vals)
        raw_labels.append(row[li].strip())
    x = np.asarray(feats, dtype=np.float64).reshape(len(body), len(header) - 1)
    if not np.all(np.isfinite(x)):
        raise DataError(f"{path}: non-finite feature values")
    if reference is None:
        mapping = {v: i for i, v in enumerate(sorted(set(raw_labels), key=_label_key))}
        mean = x.mean(axis=0) if len(body) else np.zeros(x.shape[1])
        std = x.std(axis=0) if len(body) else np.ones(x.shape[1])
        std = np.where(std > 0, std, 1.0)
        tag = split_tag or "train"
    else:
        mapping = reference.label_mapping
        mean, std = reference.standardization
        tag = split_tag or "test"
    try:
        y = np.asarray([mapping[v] for v in raw_labels], dtype=np.int64)
    except KeyError as exc:
        raise ConfigError(f"{path}: label {exc.args[0]!r} not present in the training label mapping") from None
    num_classes = reference.num_classes if reference is not None else max(len(mapping), 1)
    return NoisyDataset(
        (x - mean) / std,
        y,
        num_classes,
        true_labels=None,
        split=tag,
        label_mapping=mapping,
        standardization=(mean, std),
    )


def save_csv(dataset, path, true_labels_path=None):
    """Write ``f0..f{d-1},label`` rows; optionally a sidecar file of true labels."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(dataset.dim)] + ["label"])
        for xi, yi in zip(dataset.features, dataset.observed_labels):
            w.writerow([repr(float(v)) for v in xi] + [int(yi)])
    if true_labels_path is not None:
        if dataset.true_labels is None:
            raise ConfigError("dataset has no true labels to export")
        save_noisy_labels(true_labels_path, dataset.true_labels)

