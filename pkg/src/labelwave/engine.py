"""Small deterministic softmax classifiers trained with momentum SGD.

Two architectures: ``linear`` (one affine layer) and ``mlp`` (one ReLU hidden
layer). Everything is float64 numpy; weights are stored ``(fan_in, fan_out)``.

Checkpoint layout (see :func:`save_checkpoint`)::

    LWCKPT 1\\n
    arch <linear | mlp> <hidden width or 0>\\n
    epoch <int>\\n
    shapes <r>x<c> <b> ...\\n      # one token per array, in params.arrays order
    count <total number of floats>\\n
    \\n
    <count little-endian IEEE-754 float64 values, arrays concatenated C-order>
"""

from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np
from scipy.special import log_softmax, softmax

from labelwave.errors import ConfigError, NumericError, ParseError
from labelwave.metrics import PredictionSnapshot

Arch = Literal["linear", "mlp"]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 128
    max_epochs: int = 100
    seed: int = 0
    shuffle: bool = True
    arch: Arch = "mlp"
    hidden: int = 256

    def __post_init__(self):
        if not self.learning_rate >= 0:
            # lr == 0 is allowed as a degenerate "frozen model" run
            raise ConfigError(f"engine.learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"engine.momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError(f"engine.batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigError(f"engine.max_epochs must be >= 1, got {self.max_epochs}")
        if self.arch not in ("linear", "mlp"):
            raise ConfigError(f"engine.arch must be 'linear' or 'mlp', got {self.arch!r}")
        if self.arch == "mlp" and self.hidden < 1:
            raise ConfigError(f"engine.hidden must be >= 1 for mlp, got {self.hidden}")


@dataclass(frozen=True)
class ModelParams:
    arch: Arch
    arrays: tuple  # (W, b) for linear, (W1, b1, W2, b2) for mlp

    @property
    def hidden(self):
        return self.arrays[0].shape[1] if self.arch == "mlp" else 0

    @property
    def num_classes(self):
        return self.arrays[-1].shape[0]

    @property
    def input_dim(self):
        return self.arrays[0].shape[0]

    def copy(self):
        return ModelParams(self.arch, tuple(a.copy() for a in self.arrays))

    def zeros_like(self):
        return ModelParams(self.arch, tuple(np.zeros_like(a) for a in self.arrays))

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays])

    def equals(self, other):
        return self.arch == other.arch and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.arrays, other.arrays)
        )


@dataclass(frozen=True)
class EpochResult:
    params: ModelParams
    velocity: ModelParams
    snapshot: PredictionSnapshot
    train_error: float
    mean_loss: float


def init_params(d, num_classes, arch="mlp", seed=0, hidden=256):
    """Glorot-uniform weights, zero biases."""
    if d < 1 or num_classes < 1:
        raise ConfigError(f"need d >= 1 and C >= 1, got d={d}, C={num_classes}")
    rng = np.random.default_rng(seed)
    sizes = [d, num_classes] if arch == "linear" else [d, hidden, num_classes]
    arrays = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        arrays.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        arrays.append(np.zeros(fan_out))
    return ModelParams(arch, tuple(arrays))


def logits(params, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    # overflow surfaces as non-finite values, which callers turn into NumericError
    with np.errstate(over="ignore", invalid="ignore"):
        if params.arch == "linear":
            w, b = params.arrays
            return x @ w + b
        w1, b1, w2, b2 = params.arrays
        return np.maximum(x @ w1 + b1, 0.0) @ w2 + b2


def forward(params, x):
    """Return (logits, probabilities); a 1-D ``x`` gives 1-D outputs."""
    single = np.ndim(x) == 1
    z = logits(params, x)
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite logits in forward pass")
    p = softmax(z, axis=1)
    return (z[0], p[0]) if single else (z, p)


def predict(params, x):
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(logits(params, x), axis=1)


def loss(params, x, y):
    z = logits(params, x)
    return float(-log_softmax(z, axis=1)[np.arange(len(y)), y].mean())


def loss_and_grad(params, x, y):
    """Mean cross-entropy over the batch and its exact gradient."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y)
    m = x.shape[0]
    if m == 0:
        raise ConfigError("gradient of an empty batch")
    with np.errstate(over="ignore", invalid="ignore"):
        return _loss_and_grad(params, x, y, m)


def _loss_and_grad(params, x, y, m):
    rows = np.arange(m)
    if params.arch == "linear":
        w, b = params.arrays
        z = x @ w + b
        hidden_in = x
    else:
        w1, b1, w2, b2 = params.arrays
        pre = x @ w1 + b1
        h = np.maximum(pre, 0.0)
        z = h @ w2 + b2
        hidden_in = h
    logp = log_softmax(z, axis=1)
    value = float(-logp[rows, y].mean())
    dz = np.exp(logp)
    dz[rows, y] -= 1.0
    dz /= m
    gw_out = hidden_in.T @ dz
    gb_out = dz.sum(axis=0)
    if params.arch == "linear":
        return value, ModelParams("linear", (gw_out, gb_out))
    dh = (dz @ w2.T) * (pre > 0)
    return value, ModelParams("mlp", (x.T @ dh, dh.sum(axis=0), gw_out, gb_out))


def grad(params, x, y):
    return loss_and_grad(params, x, y)[1]


def epoch_permutation(n, seed, epoch, shuffle=True):
    if not shuffle:
        return np.arange(n)
    return np.random.default_rng([int(seed), int(epoch)]).permutation(n)


def train_epoch(params, velocity, dataset, cfg, epoch, record=True):
    """One pass of momentum SGD, then predictions on the full training set.

    Update rule: ``v <- momentum * v - lr * g``; ``theta <- theta + v``.
    ``record=False`` skips the post-epoch full-set evaluation (snapshot,
    train_error and mean_loss are then ``None``/NaN).
    """
    x = np.asarray(dataset.features, dtype=np.float64)
    y = np.asarray(dataset.observed_labels)
    n = x.shape[0]
    if n == 0:
        raise ConfigError("cannot train on an empty dataset")
    theta = list(a.copy() for a in params.arrays)
    vel = list(a.copy() for a in velocity.arrays)
    order = epoch_permutation(n, cfg.seed, epoch, cfg.shuffle)
    for start in range(0, n, cfg.batch_size):
        idx = order[start : start + cfg.batch_size]
        value, g = loss_and_grad(ModelParams(params.arch, tuple(theta)), x[idx], y[idx])
        if not np.isfinite(value):
            raise NumericError("non-finite training loss", epoch=epoch)
        for j, gj in enumerate(g.arrays):
            vel[j] *= cfg.momentum
            vel[j] -= cfg.learning_rate * gj
            theta[j] += vel[j]
    new_params = ModelParams(params.arch, tuple(theta))
    new_vel = ModelParams(params.arch, tuple(vel))
    if not record:
        return EpochResult(new_params, new_vel, None, float("nan"), float("nan"))
    z = logits(new_params, x)
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite logits after update", epoch=epoch)
    preds = np.argmax(z, axis=1)
    mean_loss = float(-log_softmax(z, axis=1)[np.arange(n), y].mean())
    return EpochResult(
        new_params,
        new_vel,
        PredictionSnapshot(epoch, preds),
        float(np.mean(preds != y)),
        mean_loss,
    )


def error_rate(predictions, labels, mask=None):
    wrong = np.asarray(predictions) != np.asarray(labels)
    if mask is not None:
        wrong = wrong[np.asarray(mask)]
        if wrong.size == 0:
            return float("nan")
    return float(wrong.mean())


def evaluate(params, dataset, against="observed", mask=None):
    """Misclassification rate against the observed (possibly noisy) or true labels.

    ``mask`` selects a subset (e.g. ``dataset.clean_mask`` or its negation);
    an empty subset yields NaN.
    """
    if against == "true":
        if dataset.true_labels is None:
            raise ConfigError("evaluation against true labels requested but the dataset has none")
        labels = dataset.true_labels
    elif against == "observed":
        labels = dataset.observed_labels
    else:
        raise ConfigError(f"unknown label channel {against!r}")
    if len(labels) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    return error_rate(predict(params, dataset.features), labels, mask)


def save_checkpoint(path, params, epoch):
    shapes = " ".join("x".join(str(s) for s in a.shape) for a in params.arrays)
    flat = params.flat().astype("<f8")
    header = (
        "LWCKPT 1\n"
        f"arch {params.arch} {params.hidden}\n"
        f"epoch {int(epoch)}\n"
        f"shapes {shapes}\n"
        f"count {flat.size}\n"
        "\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(flat.tobytes())


def load_checkpoint(path):
    """Return (params, epoch) from a file written by :func:`save_checkpoint`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise ParseError(f"{path}: missing checkpoint header terminator")
    lines = blob[:sep].decode("ascii").split("\n")
    if len(lines) != 5 or lines[0] != "LWCKPT 1":
        raise ParseError(f"{path}: not a version-1 checkpoint", line=1)
    fields = {}
    for lineno, line in enumerate(lines[1:], start=2):
        key, _, rest = line.partition(" ")
        fields[key] = (rest.split(), lineno)
    try:
        arch = fields["arch"][0][0]
        epoch = int(fields["epoch"][0][0])
        shapes = [tuple(int(s) for s in tok.split("x")) for tok in fields["shapes"][0]]
        count = int(fields["count"][0][0])
    except (KeyError, IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed checkpoint header: {exc}") from exc
    flat = np.frombuffer(blob[sep + 2 :], dtype="<f8")
    if flat.size != count or sum(int(np.prod(s)) for s in shapes) != count:
        raise ParseError(f"{path}: checkpoint payload size does not match header")
    arrays, pos = [], 0
    for s in shapes:
        size = int(np.prod(s))
        arrays.append(flat[pos : pos + size].astype(np.float64).reshape(s))
        pos += size
    return ModelParams(arch, tuple(arrays)), epoch


def with_seed(cfg, seed):
    return replace(cfg, seed=seed)
