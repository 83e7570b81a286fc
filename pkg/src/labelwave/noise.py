"""Seeded label corruption (symmetric / instance-dependent) and noisy-label files."""

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from scipy.special import log_softmax, ndtr, ndtri

from labelwave.errors import ConfigError, DataError, ParseError

NoiseKind = Literal["none", "symmetric", "instance-dependent", "from-file"]


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = "symmetric"
    rate: float = 0.0
    seed: int = 0
    path: Optional[str] = None
    std: float = 0.1  # instance-dependent only: spread of per-example flip rates

    def __post_init__(self):
        if self.kind not in ("none", "symmetric", "instance-dependent", "from-file"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.kind == "from-file":
            if not self.path:
                raise ConfigError("noise kind 'from-file' requires a path")
        elif not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"noise rate must be in [0, 1], got {self.rate}")
        if self.std < 0:
            raise ConfigError(f"noise std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class CorruptionReport:
    n_flipped: int
    realized_rate: float
    per_class_flip_counts: np.ndarray  # indexed by the true class

    @classmethod
    def compare(cls, true_labels, noisy_labels, num_classes):
        true_labels = np.asarray(true_labels)
        flipped = true_labels != np.asarray(noisy_labels)
        n = true_labels.size
        counts = np.bincount(true_labels[flipped], minlength=num_classes)
        n_flipped = int(flipped.sum())
        return cls(n_flipped, n_flipped / n if n else 0.0, counts)


def _check_labels(labels, num_classes):
    labels = np.asarray(labels)
    if num_classes < 2:
        raise ConfigError(f"label noise needs at least 2 classes, got C={num_classes}")
    if labels.ndim != 1:
        raise ConfigError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ConfigError(f"labels must lie in [0, {num_classes})")
    return labels.astype(np.int64)


def apply_symmetric(labels, num_classes, spec):
    """Flip each label with probability ``spec.rate`` to one of the other classes."""
    if spec.kind != "symmetric":
        raise ConfigError(f"apply_symmetric got a {spec.kind!r} spec")
    y = _check_labels(labels, num_classes)
    rng = np.random.default_rng(spec.seed)
    flip = rng.random(y.size) < spec.rate
    # uniform offset in 1..C-1 never lands on the original class
    offset = rng.integers(1, num_classes, size=y.size)
    noisy = np.where(flip, (y + offset) % num_classes, y)
    return noisy, CorruptionReport.compare(y, noisy, num_classes)


def truncated_normal(u, mean, std, low=0.0, high=1.0):
    """Inverse-CDF draw from N(mean, std) restricted to [low, high]."""
    u = np.asarray(u, dtype=np.float64)
    if std == 0:
        return np.full_like(u, np.clip(mean, low, high))
    a = ndtr((low - mean) / std)
    b = ndtr((high - mean) / std)
    return np.clip(mean + std * ndtri(a + u * (b - a)), low, high)


def instance_flip_distribution(features, labels, num_classes, flip_rates, projection):
    """Per-example label distribution used by instance-dependent noise.

    Row i keeps ``1 - flip_rates[i]`` on the true class and spreads the rest by
    the softmax of ``features[i] @ projection`` over the remaining classes.
    """
    scores = np.asarray(features, dtype=np.float64) @ projection
    rows = np.arange(scores.shape[0])
    scores[rows, labels] = -np.inf
    probs = np.exp(log_softmax(scores, axis=1)) * flip_rates[:, None]
    probs[rows, labels] = 1.0 - flip_rates
    return probs


def apply_instance_dependent(features, labels, num_classes, spec):
    """Feature-dependent label noise.

    Draws, in order from one seeded stream: per-example flip rates from a
    normal(rate, std) truncated to [0, 1]; a d x C standard-normal projection;
    one uniform per example used to sample the new label by inverse CDF.
    """
    if spec.kind != "instance-dependent":
        raise ConfigError(f"apply_instance_dependent got a {spec.kind!r} spec")
    y = _check_labels(labels, num_classes)
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.size or x.shape[1] < 1:
        raise ConfigError(f"features must be (n, d>=1) with n={y.size}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("instance-dependent noise requires finite features")
    rng = np.random.default_rng(spec.seed)
    q = truncated_normal(rng.random(y.size), spec.rate, spec.std)
    projection = rng.standard_normal((x.shape[1], num_classes))
    u = rng.random(y.size)
    probs = instance_flip_distribution(x, y, num_classes, q, projection)
    cdf = np.cumsum(probs, axis=1)
    noisy = (u[:, None] >= cdf).sum(axis=1)
    noisy = np.minimum(noisy, num_classes - 1)  # guards cdf[-1] rounding below 1
    return noisy, CorruptionReport.compare(y, noisy, num_classes)


def apply_noise(features, labels, num_classes, spec):
    """Dispatch on ``spec.kind``; returns (noisy labels, report)."""
    if spec.kind == "none" or (spec.kind == "symmetric" and spec.rate == 0):
        y = _check_labels(labels, num_classes)
        return y.copy(), CorruptionReport.compare(y, y, num_classes)
    if spec.kind == "symmetric":
        return apply_symmetric(labels, num_classes, spec)
    if spec.kind == "instance-dependent":
        return apply_instance_dependent(features, labels, num_classes, spec)
    y = _check_labels(labels, num_classes)
    noisy = load_noisy_labels(spec.path, expected_n=y.size)
    if noisy.size and noisy.max() >= num_classes:
        raise ConfigError(f"{spec.path}: label {noisy.max()} is outside [0, {num_classes})")
    return noisy, CorruptionReport.compare(y, noisy, num_classes)


def _parse_int(cell, lineno, column=None):
    try:
        return int(cell.strip())
    except ValueError:
        raise ParseError(f"not an integer label: {cell.strip()!r}", line=lineno, column=column) from None


def parse_noisy_labels(text):
    """Parse either one integer per line or a headed two-column CSV (index,label)."""
    lines = text.splitlines()
    first = next((ln for ln in lines if ln.strip()), "")
    if "," not in first:
        out = []
        for lineno, line in enumerate(lines, start=1):
            if line.strip():
                out.append(_parse_int(line, lineno))
        return np.asarray(out, dtype=np.int64)
    out = []
    reader = csv.reader(io.StringIO(text))
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or not any(c.strip() for c in row):
            continue
        if not header_seen:
            header_seen = True
            try:
                [int(c) for c in row]
            except ValueError:
                continue  # header row
        if len(row) != 2:
            raise ParseError(f"expected 2 columns (index,label), got {len(row)}", line=lineno)
        _parse_int(row[0], lineno, column=1)
        out.append(_parse_int(row[1], lineno, column=2))
    return np.asarray(out, dtype=np.int64)


def load_noisy_labels(path, expected_n=None):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read noisy-label file {path}: {exc}") from exc
    labels = parse_noisy_labels(text)
    if labels.size and labels.min() < 0:
        raise ParseError(f"{path}: negative label {labels.min()}")
    if expected_n is not None and labels.size != expected_n:
        raise ConfigError(f"{path}: holds {labels.size} labels but the dataset has {expected_n}")
    return labels


def save_noisy_labels(path, labels, csv_format=False):
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if csv_format:
            fh.write("index,label\n")
            for i, v in enumerate(labels):
                fh.write(f"{i},{v}\n")
        else:
            for v in labels:
                fh.write(f"{v}\n")
