"""Label Wave stopping rule: halt at the first local minimum of smoothed PC.

The stopper only ever sees prediction-change counts (or the snapshots they are
computed from). It never touches labels, losses, or held-out data.

Trace files consumed by :func:`read_trace` hold one JSON object per line::

    {"epoch": 0, "predictions": [3, 1, 4, ...]}

All prediction arrays must have the same length and epochs must be strictly
increasing.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np

from labelwave.errors import ConfigError, InsufficientDataError, ParseError, ProtocolError
from labelwave.metrics import PredictionSnapshot, moving_average, prediction_changes, window_mean

Verdict = Literal["new-best", "worsened", "halt"]


@dataclass(frozen=True)
class StopperConfig:
    k: int = 3  # moving-average window in observations
    patience: int = 10
    steps_per_check: int = 1

    def __post_init__(self):
        for name in ("k", "patience", "steps_per_check"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"stopper.{name} must be an integer >= 1, got {value!r}")


@dataclass
class StopperState:
    best_value: float = math.inf
    counter: int = 0
    best_epoch: Optional[int] = None
    best_ref: Any = None
    history: list = field(default_factory=list)
    smoothed: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    halted: bool = False


@dataclass(frozen=True)
class StopDecision:
    verdict: Verdict
    epoch: int
    best_epoch: int
    smoothed_value: float
    counter: int


class LabelWaveStopper:
    """Incremental Label Wave detector.

    Feed one prediction-change count per check with :meth:`observe`. The
    decision's verdict becomes ``"halt"`` once ``patience`` consecutive smoothed
    values fail to beat the best one; ties count as failures.
    """

    def __init__(self, config=None):
        self.config = config or StopperConfig()
        self.state = StopperState()
        self._last_snapshot = None

    @property
    def best_epoch(self):
        return self.state.best_epoch

    @property
    def best_ref(self):
        return self.state.best_ref

    @property
    def halted(self):
        return self.state.halted

    def observe(self, pc, epoch, checkpoint_ref=None):
        st = self.state
        if st.halted:
            raise ProtocolError("stopper already halted; create a new one to restart")
        if st.epochs and epoch <= st.epochs[-1]:
            raise ProtocolError(
                f"epochs must be strictly increasing: got {epoch} after {st.epochs[-1]}"
            )
        st.history.append(float(pc))
        st.epochs.append(int(epoch))
        smoothed = window_mean(st.history, self.config.k)
        st.smoothed.append(smoothed)
        if smoothed < st.best_value:
            st.best_value = smoothed
            st.counter = 0
            st.best_epoch = int(epoch)
            st.best_ref = checkpoint_ref
            verdict = "new-best"
        else:
            st.counter += 1
            if st.counter >= self.config.patience:
                st.halted = True
                verdict = "halt"
            else:
                verdict = "worsened"
        return StopDecision(verdict, int(epoch), st.best_epoch, smoothed, st.counter)

    def observe_snapshot(self, snapshot, checkpoint_ref=None):
        """Observe a snapshot; returns ``None`` for the first one (PC undefined)."""
        prev, self._last_snapshot = self._last_snapshot, snapshot
        if prev is None:
            return None
        return self.observe(prediction_changes(prev, snapshot), snapshot.epoch, checkpoint_ref)


@dataclass(frozen=True)
class TraceResult:
    best_epoch: Optional[int]
    best_value: float
    halt_epoch: Optional[int]  # None means the trace ran out first
    epochs: np.ndarray
    pc: np.ndarray
    smoothed: np.ndarray
    decisions: tuple

    @property
    def exhausted(self):
        return self.halt_epoch is None

    def as_dict(self):
        return {
            "t_star": self.best_epoch,
            "halt_epoch": "exhausted" if self.exhausted else self.halt_epoch,
            "v": self.best_value,
        }


def run_pc_series(pcs, epochs, config=None):
    """Replay a prediction-change series through a fresh stopper."""
    config = config or StopperConfig()
    stopper = LabelWaveStopper(config)
    decisions = []
    halt_epoch = None
    for pc, epoch in zip(pcs, epochs):
        d = stopper.observe(pc, epoch)
        decisions.append(d)
        if d.verdict == "halt":
            halt_epoch = d.epoch
            break
    return TraceResult(
        best_epoch=stopper.best_epoch,
        best_value=stopper.state.best_value,
        halt_epoch=halt_epoch,
        epochs=np.asarray(epochs, dtype=np.int64),
        pc=np.asarray(pcs, dtype=np.float64),
        smoothed=moving_average(pcs, config.k),
        decisions=tuple(decisions),
    )


def run_over_trace(trace, config=None, mask=None):
    """Offline Label Wave over recorded snapshots.

    The first PC value sits at the second snapshot considered. With
    ``steps_per_check > 1`` only every ``steps_per_check``-th snapshot is used.
    The returned smoothed/pc arrays cover the whole trace, even past the halt.
    """
    config = config or StopperConfig()
    trace = list(trace)[:: config.steps_per_check]
    if len(trace) < 2:
        raise InsufficientDataError(
            f"need at least 2 snapshots to compute prediction changes, got {len(trace)}"
        )
    pcs = [prediction_changes(a, b, mask) for a, b in zip(trace[:-1], trace[1:])]
    epochs = [s.epoch for s in trace[1:]]
    return run_pc_series(pcs, epochs, config)


def read_trace(path):
    """Parse a line-delimited JSON trace into snapshots."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read trace file {path}: {exc}") from exc
    snapshots = []
    n = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(rec, dict) or set(rec) != {"epoch", "predictions"}:
            raise ParseError(f"{path}: record must have exactly 'epoch' and 'predictions'", line=lineno)
        epoch, preds = rec["epoch"], rec["predictions"]
        if not isinstance(epoch, int) or isinstance(epoch, bool) or epoch < 0:
            raise ParseError(f"{path}: epoch must be a non-negative integer", line=lineno)
        if not isinstance(preds, list) or not all(
            isinstance(p, int) and not isinstance(p, bool) and p >= 0 for p in preds
        ):
            raise ParseError(f"{path}: predictions must be a list of non-negative integers", line=lineno)
        if n is None:
            n = len(preds)
        elif len(preds) != n:
            raise ParseError(f"{path}: expected {n} predictions, got {len(preds)}", line=lineno)
        if snapshots and epoch <= snapshots[-1].epoch:
            raise ParseError(
                f"{path}: epoch {epoch} does not follow {snapshots[-1].epoch}", line=lineno
            )
        snapshots.append(PredictionSnapshot(epoch, np.asarray(preds, dtype=np.int64)))
    if not snapshots:
        raise ParseError(f"{path}: trace is empty", line=1)
    return snapshots


def write_trace(path, snapshots):
    with open(path, "w", encoding="utf-8") as fh:
        for s in snapshots:
            rec = {"epoch": int(s.epoch), "predictions": [int(v) for v in s.labels]}
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
