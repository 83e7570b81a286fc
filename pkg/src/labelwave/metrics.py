"""Fluctuation metrics over training-set predictions, plus correlation helpers.

Everything here is a pure function of its arguments.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from labelwave.errors import ConfigError, UndefinedCorrelationError


@dataclass(frozen=True)
class PredictionSnapshot:
    """Predicted class of every training example after one epoch."""

    epoch: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ConfigError(f"snapshot labels must be 1-D, got shape {labels.shape}")
        if labels.size and labels.min() < 0:
            raise ConfigError("snapshot labels must be non-negative class indices")
        if self.epoch < 0:
            raise ConfigError(f"snapshot epoch must be >= 0, got {self.epoch}")
        object.__setattr__(self, "labels", labels)


def _labels(x):
    return x.labels if isinstance(x, PredictionSnapshot) else np.asarray(x)


def prediction_changes(prev, curr, mask=None):
    """Number of examples whose predicted label differs between two snapshots.

    ``prev``/``curr`` may be snapshots or plain label arrays. ``mask`` restricts
    the count to a subset of example indices (boolean array or index array).
    """
    a, b = _labels(prev), _labels(curr)
    if a.shape != b.shape:
        raise ConfigError(
            f"snapshot length mismatch: prev has {a.size} labels, curr has {b.size}"
        )
    changed = a != b
    if mask is not None:
        changed = changed[np.asarray(mask)]
    return int(np.count_nonzero(changed))


def k_epoch_learning(window, mask=None):
    """Count examples in ``mask`` that were classified correctly in every row.

    ``window`` is a (k, n) 0/1 matrix, most recent epoch first. An omitted mask
    selects every example.
    """
    w = np.asarray(window)
    if w.ndim == 1:
        w = w[None, :]
    if w.ndim != 2 or w.shape[0] < 1:
        raise ConfigError(f"accuracy window must have k >= 1 rows, got shape {w.shape}")
    stable = np.all(w.astype(bool), axis=0)
    if mask is not None:
        m = np.asarray(mask).astype(bool)
        if m.shape != stable.shape:
            raise ConfigError(
                f"subset mask length {m.size} does not match window width {stable.size}"
            )
        stable &= m
    return int(np.count_nonzero(stable))


def accuracy_window(history, observed, k):
    """Build the (k, n) correctness matrix from the last ``k`` predicted-label arrays."""
    if len(history) < k:
        raise ConfigError(f"need {k} snapshots for a k-epoch window, have {len(history)}")
    observed = np.asarray(observed)
    rows = [np.asarray(_labels(h)) == observed for h in reversed(history[-k:])]
    return np.stack(rows).astype(np.int8)


def moving_average(values, k):
    """Trailing mean over the last ``k`` values.

    The first ``k - 1`` entries average whatever prefix is available, so the
    output has the same length as the input.
    """
    if int(k) != k or k < 1:
        raise ConfigError(f"moving-average window k must be an integer >= 1, got {k!r}")
    k = int(k)
    x = np.asarray(values, dtype=np.float64)
    if k == 1:
        return x.copy()
    out = np.empty_like(x)
    for t in range(x.size):
        out[t] = window_mean(x[: t + 1], k)
    return out


def window_mean(prefix, k):
    """Mean of the last ``k`` entries of ``prefix`` (fewer if it is shorter)."""
    return float(np.asarray(prefix, dtype=np.float64)[-k:].mean())


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigError(f"correlation inputs must be 1-D and equal length, got {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ConfigError("correlation needs at least 2 observations")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ConfigError("correlation inputs must be finite")
    return a, b


def kendall_tau(a, b):
    """Tie-corrected Kendall tau-b."""
    a, b = _check_pair(a, b)
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise UndefinedCorrelationError("Kendall tau is undefined for a constant input")
    tau = stats.kendalltau(a, b, variant="b").statistic
    return float(np.clip(tau, -1.0, 1.0))


def pearson(a, b):
    """Product-moment correlation coefficient."""
    a, b = _check_pair(a, b)
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    if saa == 0.0 or sbb == 0.0:
        raise UndefinedCorrelationError("Pearson correlation is undefined for zero variance")
    r = float(np.dot(da, db)) / np.sqrt(saa * sbb)
    return float(np.clip(r, -1.0, 1.0))
