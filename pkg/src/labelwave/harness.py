"""Instrumented training runs plus the model selectors and sweeps built on them.

A :class:`RunRecord` holds one row per epoch. Selectors are pure functions of
a record, so reports can be regenerated from archived run CSVs.
"""

import csv
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from labelwave import engine
from labelwave.datasets import SplitSpec, load_csv, make_train_test, split
from labelwave.errors import ConfigError, LabelWaveError, UndefinedCorrelationError
from labelwave.metrics import (
    accuracy_window,
    k_epoch_learning,
    kendall_tau,
    moving_average,
    pearson,
    prediction_changes,
    window_mean,
)
from labelwave.stopper import LabelWaveStopper, StopperConfig, run_pc_series

log = logging.getLogger(__name__)

COLUMNS = (
    "epoch",
    "pc",
    "smoothed_pc",
    "test_error",
    "train_error",
    "train_loss",
    "mislabeled_train_error",
    "clean_k_epoch_learning",
    "holdout_error",
)


@dataclass
class RunRecord:
    series: dict  # column name -> float array, NaN for missing
    halt_epoch: Optional[int] = None  # where the live stopper fired, if it did
    fingerprint: str = ""
    config: dict = field(default_factory=dict)
    checkpoints: dict = field(default_factory=dict, repr=False)  # name -> (epoch, ModelParams)
    checkpoint_epochs: list = field(default_factory=list)  # every new-best epoch of the stopper

    def __len__(self):
        return len(self.series["epoch"])

    def __getitem__(self, name):
        return self.series[name]

    @property
    def epochs(self):
        return self.series["epoch"].astype(np.int64)

    def test_accuracy(self, epoch):
        """Test accuracy in percent at ``epoch``."""
        row = int(np.nonzero(self.epochs == epoch)[0][0])
        return 100.0 * (1.0 - float(self.series["test_error"][row]))

    def redacted(self, *names):
        series = {k: v.copy() for k, v in self.series.items()}
        for name in names:
            series[name] = np.full(len(self), np.nan)
        return replace(self, series=series, checkpoints={})

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for i in range(len(self)):
                row = []
                for col in COLUMNS:
                    v = float(self.series[col][i])
                    if math.isnan(v):
                        row.append("")
                    elif col in ("epoch", "pc") or (col == "clean_k_epoch_learning" and v.is_integer()):
                        row.append(str(int(v)))
                    else:
                        row.append(repr(v))
                w.writerow(row)

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != COLUMNS:
            raise ConfigError(f"{path}: not a run CSV (expected header {','.join(COLUMNS)})")
        data = {c: [] for c in COLUMNS}
        for row in rows[1:]:
            for c, cell in zip(COLUMNS, row):
                data[c].append(float(cell) if cell != "" else np.nan)
        return cls({c: np.asarray(v, dtype=np.float64) for c, v in data.items()})


def run_training(
    train,
    test,
    train_cfg,
    stopper_cfg=None,
    holdout=None,
    pc_mask=None,
    kel_window=8,
    mode="experiment",
    overrun=0,
    config=None,
    fingerprint="",
):
    """Train with momentum SGD and record every curve, one row per epoch.

    The stopper sees prediction changes on ``train`` (restricted to ``pc_mask``
    when given) every ``steps_per_check`` epochs. In ``"experiment"`` mode
    training continues to ``max_epochs`` after the stopper halts; ``"live"``
    stops ``overrun`` epochs after the halt.
    """
    stopper_cfg = stopper_cfg or StopperConfig()
    if mode not in ("experiment", "live"):
        raise ConfigError(f"unknown run mode {mode!r}")
    if test.dim != train.dim or (holdout is not None and holdout.dim != train.dim):
        raise ConfigError("train/test/holdout feature dimensions differ")
    params = engine.init_params(train.dim, train.num_classes, train_cfg.arch, train_cfg.seed, train_cfg.hidden)
    velocity = params.zeros_like()
    stopper = LabelWaveStopper(stopper_cfg)

    rows = {c: [] for c in COLUMNS}
    clean = train.clean_mask
    mislabeled = train.mislabeled_mask
    recent = deque(maxlen=kel_window)
    last_checked = None
    halt_epoch = None
    best_test = (math.inf, None)
    best_holdout = (math.inf, None)
    new_bests = []
    pc_history = []

    for epoch in range(train_cfg.max_epochs):
        res = engine.train_epoch(params, velocity, train, train_cfg, epoch)
        params, velocity = res.params, res.velocity
        snap = res.snapshot
        recent.append(snap.labels)

        pc = smoothed = np.nan
        if epoch % stopper_cfg.steps_per_check == 0:
            if last_checked is not None:
                pc = prediction_changes(last_checked, snap, pc_mask)
                pc_history.append(pc)
                # same window as the stopper's, and continued past the halt
                smoothed = window_mean(pc_history, stopper_cfg.k)
                if not stopper.halted:
                    decision = stopper.observe(pc, epoch, checkpoint_ref=params)
                    if decision.verdict == "new-best":
                        new_bests.append(epoch)
                    elif decision.verdict == "halt":
                        halt_epoch = epoch
            last_checked = snap

        test_err = engine.evaluate(params, test, "true" if test.true_labels is not None else "observed")
        if test_err < best_test[0]:
            best_test = (test_err, (epoch, params))
        hold_err = np.nan
        if holdout is not None and len(holdout):
            hold_err = engine.evaluate(params, holdout, "observed")
            if hold_err < best_holdout[0]:
                best_holdout = (hold_err, (epoch, params))
        kel = np.nan
        if clean is not None and len(recent) == kel_window:
            kel = k_epoch_learning(accuracy_window(list(recent), train.observed_labels, kel_window), clean)

        rows["epoch"].append(epoch)
        rows["pc"].append(pc)
        rows["smoothed_pc"].append(smoothed)
        rows["test_error"].append(test_err)
        rows["train_error"].append(res.train_error)
        rows["train_loss"].append(res.mean_loss)
        rows["mislabeled_train_error"].append(
            engine.error_rate(snap.labels, train.observed_labels, mislabeled) if mislabeled is not None and mislabeled.any() else np.nan
        )
        rows["clean_k_epoch_learning"].append(kel)
        rows["holdout_error"].append(hold_err)

        if mode == "live" and halt_epoch is not None and epoch >= halt_epoch + overrun:
            break

    checkpoints = {"global_max": best_test[1]}
    if stopper.best_epoch is not None:
        checkpoints["label_wave"] = (stopper.best_epoch, stopper.best_ref)
    if best_holdout[1] is not None:
        checkpoints["holdout"] = best_holdout[1]
    return RunRecord(
        {c: np.asarray(v, dtype=np.float64) for c, v in rows.items()},
        halt_epoch=halt_epoch,
        fingerprint=fingerprint,
        config=config or {},
        checkpoints=checkpoints,
        checkpoint_epochs=new_bests,
    )


@dataclass(frozen=True)
class LabelWaveSelection:
    epoch: Optional[int]  # None when the stopper never halted
    halt_epoch: Optional[int]
    provisional_epoch: Optional[int]  # best-so-far when exhausted; informational only
    best_value: float

    @property
    def exhausted(self):
        return self.epoch is None

    @property
    def status(self):
        return "exhausted" if self.exhausted else "halted"


def select_label_wave(record, stopper_cfg=None):
    """Replay the stopper over the recorded PC column only."""
    stopper_cfg = stopper_cfg or StopperConfig()
    if len(record) < 2:
        raise ConfigError("label-wave selection needs a record with at least 2 epochs")
    pc = record["pc"]
    valid = ~np.isnan(pc)
    if not valid.any():
        raise ConfigError("record has no prediction-change values")
    res = run_pc_series(pc[valid], record.epochs[valid], stopper_cfg)
    if res.exhausted:
        return LabelWaveSelection(None, None, res.best_epoch, res.best_value)
    return LabelWaveSelection(res.best_epoch, res.halt_epoch, res.best_epoch, res.best_value)


def _argmin_epoch(record, column):
    values = record[column]
    if np.all(np.isnan(values)):
        raise ConfigError(f"record has no {column} series")
    return int(record.epochs[int(np.nanargmin(values))])  # first minimum wins ties


def select_holdout(record):
    return _argmin_epoch(record, "holdout_error")


def select_global_max(record):
    return _argmin_epoch(record, "test_error")


def difference(a_gm, a_lw):
    """Oracle-minus-Label-Wave test accuracy, in the units of the inputs (percent)."""
    return float(a_gm) - float(a_lw)


def gain(a_lw, a_holdout):
    return float(a_lw) - float(a_holdout)


@dataclass(frozen=True)
class SelectionReport:
    label_wave_epoch: Optional[int]
    label_wave_status: str
    label_wave_accuracy: Optional[float]
    global_max_epoch: int
    global_max_accuracy: float
    holdout_epoch: Optional[int] = None
    holdout_accuracy: Optional[float] = None
    holdout_fraction: Optional[float] = None
    halt_epoch: Optional[int] = None
    provisional_epoch: Optional[int] = None

    @property
    def difference(self):
        if self.label_wave_accuracy is None:
            return None
        return difference(self.global_max_accuracy, self.label_wave_accuracy)

    def to_dict(self):
        d = {
            "label_wave": {
                "epoch": self.label_wave_epoch,
                "status": self.label_wave_status,
                "test_accuracy": self.label_wave_accuracy,
                "halt_epoch": self.halt_epoch,
                "provisional_epoch": self.provisional_epoch,
            },
            "global_max": {"epoch": self.global_max_epoch, "test_accuracy": self.global_max_accuracy},
            "holdout": None,
            "difference": self.difference,
        }
        if self.holdout_epoch is not None:
            d["holdout"] = {
                "fraction": self.holdout_fraction,
                "epoch": self.holdout_epoch,
                "test_accuracy": self.holdout_accuracy,
            }
        return d


def selection_report(record, stopper_cfg=None, holdout_fraction=None):
    lw = select_label_wave(record, stopper_cfg)
    gm = select_global_max(record)
    ho = None
    if not np.all(np.isnan(record["holdout_error"])):
        ho = select_holdout(record)
    return SelectionReport(
        label_wave_epoch=lw.epoch,
        label_wave_status=lw.status,
        label_wave_accuracy=None if lw.exhausted else record.test_accuracy(lw.epoch),
        global_max_epoch=gm,
        global_max_accuracy=record.test_accuracy(gm),
        holdout_epoch=ho,
        holdout_accuracy=None if ho is None else record.test_accuracy(ho),
        holdout_fraction=holdout_fraction if ho is not None else None,
        halt_epoch=lw.halt_epoch,
        provisional_epoch=lw.provisional_epoch,
    )


def mean_std(values):
    """(mean, sample std) ignoring None; std is 0 for a single value."""
    v = np.asarray([x for x in values if x is not None], dtype=np.float64)
    if v.size == 0:
        return None, None
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def aggregate_reports(reports):
    out = {"n": len(reports)}
    for key in ("global_max_accuracy", "label_wave_accuracy", "holdout_accuracy", "difference"):
        mean, std = mean_std(getattr(r, key) for r in reports)
        out[key] = {"mean": mean, "std": std}
    out["exhausted"] = sum(r.label_wave_status == "exhausted" for r in reports)
    return out


def _pc_and_accuracy(record):
    pc = record["pc"]
    valid = ~np.isnan(pc)
    return pc[valid], 1.0 - record["test_error"][valid]


def correlation_sweep(records, ks=(1, 2, 3, 5, 10)):
    """Pearson(PC', test accuracy) per k and Kendall tau(-PC', test accuracy) per record.

    Both run across epochs at which PC is defined. Undefined correlations
    (constant series) are reported as None and left out of the aggregates.
    """
    per_record = []
    for rec in records:
        pc, acc = _pc_and_accuracy(rec)
        entry = {"fingerprint": rec.fingerprint, "pearson": {}, "kendall": {}}
        for k in ks:
            smoothed = moving_average(pc, k)
            try:
                entry["pearson"][k] = pearson(smoothed, acc)
            except (UndefinedCorrelationError, ConfigError):
                entry["pearson"][k] = None
            try:
                entry["kendall"][k] = kendall_tau(-smoothed, acc)
            except (UndefinedCorrelationError, ConfigError):
                entry["kendall"][k] = None
        per_record.append(entry)
    aggregate = {}
    for name in ("pearson", "kendall"):
        aggregate[name] = {}
        for k in ks:
            mean, std = mean_std(e[name][k] for e in per_record)
            n = sum(e[name][k] is not None for e in per_record)
            aggregate[name][k] = {"mean": mean, "std": std, "n": n}
    return {"records": per_record, "aggregate": aggregate}


# --- experiment assembly --------------------------------------------------


def build_data(cfg):
    """Noisy training pool, clean test set and the corruption report."""
    ds = cfg.dataset
    if ds.kind == "mixture":
        train, test = make_train_test(ds.mixture())
    else:
        train = load_csv(ds.train_path, ds.label_column)
        test = load_csv(ds.test_path, ds.label_column, reference=train)
        test = replace(test, true_labels=test.observed_labels.copy())
    train, report = train.with_noise(cfg.noise)
    return train, test, report


def run_experiment(cfg, holdout_fraction=None, pc_subset=None):
    """One seeded run as described by ``cfg`` (seed fields taken as given)."""
    h = cfg.harness
    fraction = h.holdout_fraction if holdout_fraction is None else holdout_fraction
    pc_subset = pc_subset or h.pc_subset
    pool, test, corruption = build_data(cfg)
    train, holdout, pc_mask = pool, None, None
    if fraction > 0:
        rest, hold = split(pool, SplitSpec(fraction, cfg.dataset.seed))
        if pc_subset == "holdout":
            pc_mask = np.zeros(len(pool), dtype=bool)
            pc_mask[hold.indices] = True
        else:
            train, holdout = rest, hold
    record = run_training(
        train,
        test,
        cfg.engine,
        cfg.stopper,
        holdout=holdout,
        pc_mask=pc_mask,
        kel_window=h.kel_window,
        mode=h.mode,
        overrun=h.overrun,
        config=cfg.to_dict(),
        fingerprint=cfg.fingerprint(),
    )
    record.config["corruption"] = {
        "n_flipped": corruption.n_flipped,
        "realized_rate": corruption.realized_rate,
    }
    return record


@dataclass(frozen=True)
class MatchedComparison:
    """Label Wave trained on the full pool (PC on the holdout indices) vs holdout selection."""

    seed: int
    noise_rate: float
    holdout_fraction: float
    label_wave: LabelWaveSelection
    label_wave_accuracy: Optional[float]
    holdout_epoch: int
    holdout_accuracy: float
    lw_record: RunRecord = field(repr=False, default=None)
    holdout_record: RunRecord = field(repr=False, default=None)

    @property
    def gain(self):
        if self.label_wave_accuracy is None:
            return None
        return gain(self.label_wave_accuracy, self.holdout_accuracy)

    def row(self):
        return {
            "noise_rate": self.noise_rate,
            "holdout_fraction": self.holdout_fraction,
            "seed": self.seed,
            "lw_status": self.label_wave.status,
            "lw_epoch": self.label_wave.epoch,
            "lw_test_acc": self.label_wave_accuracy,
            "holdout_epoch": self.holdout_epoch,
            "holdout_test_acc": self.holdout_accuracy,
            "gain": self.gain,
        }


def matched_comparison(cfg, fraction):
    """Both halves of the matched-data protocol for the seed already set in ``cfg``."""
    if not 0 < fraction < 1:
        raise ConfigError(f"holdout fraction must be in (0, 1), got {fraction}")
    lw_rec = run_experiment(cfg, fraction, pc_subset="holdout")
    ho_rec = run_experiment(cfg, fraction, pc_subset="all")
    lw = select_label_wave(lw_rec, cfg.stopper)
    ho = select_holdout(ho_rec)
    return MatchedComparison(
        seed=cfg.engine.seed,
        noise_rate=cfg.noise.rate,
        holdout_fraction=fraction,
        label_wave=lw,
        label_wave_accuracy=None if lw.exhausted else lw_rec.test_accuracy(lw.epoch),
        holdout_epoch=ho,
        holdout_accuracy=ho_rec.test_accuracy(ho),
        lw_record=lw_rec,
        holdout_record=ho_rec,
    )


SWEEP_COLUMNS = (
    "noise_rate",
    "holdout_fraction",
    "seed",
    "lw_status",
    "lw_epoch",
    "lw_test_acc",
    "holdout_epoch",
    "holdout_test_acc",
    "gain",
)


def noise_rate_sweep(cfg, rates=None, fractions=None, seeds=None, out_dir=None):
    """Full factorial rate x fraction x seed grid of matched comparisons.

    With ``out_dir`` each finished cell is cached as JSON keyed by its config
    fingerprint, so an interrupted sweep resumes where it stopped. A cell that
    raises is recorded with status ``failed`` and empty numbers.
    """
    h = cfg.harness
    rates = h.sweep_rates if rates is None else rates
    fractions = h.sweep_fractions if fractions is None else fractions
    seeds = h.seeds if seeds is None else seeds
    for r in rates:
        if not 0 <= r < 1:
            raise ConfigError(f"sweep noise rate must be in [0, 1), got {r}")
    for f in fractions:
        if not 0 < f < 1:
            raise ConfigError(f"sweep holdout fraction must be in (0, 1), got {f}")
    cell_dir = None
    if out_dir is not None:
        cell_dir = Path(out_dir) / "cells"
        cell_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for rate in rates:
        for fraction in fractions:
            for seed in seeds:
                cell_cfg = replace(
                    cfg.with_noise_rate(rate).with_seed(seed),
                    harness=replace(cfg.harness, holdout_fraction=fraction),
                )
                key = f"{cell_cfg.fingerprint()}-s{seed}"
                cached = cell_dir / f"{key}.json" if cell_dir is not None else None
                if cached is not None and cached.exists():
                    rows.append(json.loads(cached.read_text("utf-8")))
                    continue
                try:
                    cmp = matched_comparison(cell_cfg, fraction)
                    row = cmp.row()
                    corr = correlation_sweep([cmp.lw_record], cell_cfg.harness.correlation_ks)["records"][0]
                    row["correlation"] = {
                        name: {str(k): v for k, v in corr[name].items()} for name in ("pearson", "kendall")
                    }
                except LabelWaveError as exc:
                    log.warning("sweep cell rate=%s fraction=%s seed=%s failed: %s", rate, fraction, seed, exc)
                    row = {c: None for c in SWEEP_COLUMNS}
                    row["correlation"] = None
                    row.update(noise_rate=rate, holdout_fraction=fraction, seed=seed, lw_status=f"failed: {exc}")
                if cached is not None:
                    cached.write_text(json.dumps(row, sort_keys=True), encoding="utf-8")
                rows.append(row)
    return rows


def gain_surface(rows):
    """Mean/std gain per (rate, fraction) over seeds with a defined gain."""
    cells = {}
    for row in rows:
        cells.setdefault((row["noise_rate"], row["holdout_fraction"]), []).append(row)
    out = []
    for (rate, fraction), group in sorted(cells.items()):
        mean, std = mean_std(r["gain"] for r in group)
        out.append({
            "noise_rate": rate,
            "holdout_fraction": fraction,
            "mean_gain": mean,
            "std_gain": std,
            "n": sum(r["gain"] is not None for r in group),
            "exhausted": sum(r["lw_status"] == "exhausted" for r in group),
        })
    return out


def sweep_correlations(rows):
    """Per (rate, fraction) mean/std of the per-cell correlations, keyed by k."""
    groups = {}
    for row in rows:
        if row.get("correlation"):
            groups.setdefault(f"rate={row['noise_rate']},fraction={row['holdout_fraction']}", []).append(row["correlation"])
    out = {}
    for key, corrs in sorted(groups.items()):
        out[key] = {}
        for name in ("pearson", "kendall"):
            out[key][name] = {}
            for k in corrs[0][name]:
                mean, std = mean_std(c[name][k] for c in corrs)
                out[key][name][k] = {"mean": mean, "std": std, "n": sum(c[name][k] is not None for c in corrs)}
    return out


def write_rows(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row.get(c) is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in columns])


def write_plot_data(record, out_dir):
    """Two-column (epoch, value) CSV per curve, skipping missing points."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for col in COLUMNS[1:]:
        values = record[col]
        if np.all(np.isnan(values)):
            continue
        with open(out_dir / f"{col}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", col])
            for e, v in zip(record.epochs, values):
                if not math.isnan(v):
                    w.writerow([int(e), repr(float(v))])
