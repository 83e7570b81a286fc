"""Shared fixtures-as-functions for the engine and acceptance tests."""

import numpy as np

from labelwave import engine
from labelwave.datasets import NoisyDataset
from labelwave.engine import TrainConfig
from labelwave.metrics import PredictionSnapshot

import oracles


def small_problem(seed):
    """Random tiny model and batch: arch, d, C, hidden, batch size all drawn from ``seed``."""
    r = np.random.default_rng(seed)
    arch = "mlp" if r.random() < 0.7 else "linear"
    d, C, H, m = int(r.integers(2, 6)), int(r.integers(2, 5)), int(r.integers(2, 7)), int(r.integers(1, 6))
    params = engine.init_params(d, C, arch, seed=int(r.integers(2**31)), hidden=H)
    # non-zero biases so the check also covers them
    params = engine.ModelParams(arch, tuple(a + 0.1 * r.standard_normal(a.shape) for a in params.arrays))
    x = r.normal(size=(m, d))
    y = r.integers(0, C, m)
    return params, x, y


def unflatten(template, flat):
    arrays, pos = [], 0
    for a in template.arrays:
        arrays.append(np.asarray(flat[pos : pos + a.size], dtype=np.float64).reshape(a.shape))
        pos += a.size
    return engine.ModelParams(template.arch, tuple(arrays))


def max_fd_error(params, x, y, h=1e-5):
    analytic = engine.grad(params, x, y).flat().tolist()
    numeric = oracles.central_difference(lambda t: engine.loss(unflatten(params, t), x, y), params.flat().tolist(), h)
    return max(oracles.relative_errors(analytic, numeric))


def toy_dataset(n=40, d=3, C=3, seed=0):
    r = np.random.default_rng(seed)
    y = np.arange(n) % C
    x = r.normal(size=(n, d)) + 3.0 * np.eye(C, d)[y]
    return NoisyDataset(x, y, C, true_labels=y.copy())


def tiny_config(**engine_overrides):
    """A few-second experiment config for harness and CLI tests."""
    from dataclasses import replace

    from labelwave.config import DatasetConfig, ExperimentConfig, HarnessConfig
    from labelwave.noise import NoiseSpec
    from labelwave.stopper import StopperConfig

    eng = TrainConfig(learning_rate=0.02, batch_size=32, max_epochs=15, hidden=16, seed=1)
    return ExperimentConfig(
        dataset=DatasetConfig(n_train=300, n_test=200, dim=6, num_classes=4, seed=1),
        noise=NoiseSpec("symmetric", 0.4, 1),
        engine=replace(eng, **engine_overrides),
        stopper=StopperConfig(k=2, patience=3),
        harness=HarnessConfig(seeds=(1, 2), sweep_rates=(0.4,), sweep_fractions=(0.2,), correlation_ks=(1, 3)),
    )


def snapshots_for_pcs(pcs, n=20, seed=0):
    """Snapshots whose consecutive Hamming distances are exactly ``pcs``."""
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=np.int64)
    out = [PredictionSnapshot(0, labels.copy())]
    for t, pc in enumerate(pcs, start=1):
        idx = rng.choice(n, size=pc, replace=False)
        labels = labels.copy()
        labels[idx] = (labels[idx] + 1) % 3
        out.append(PredictionSnapshot(t, labels))
    return out
