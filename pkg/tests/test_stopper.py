import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from labelwave.errors import ConfigError, InsufficientDataError, ParseError, ProtocolError
from labelwave.metrics import PredictionSnapshot
from labelwave.stopper import (
    LabelWaveStopper,
    StopperConfig,
    read_trace,
    run_over_trace,
    run_pc_series,
    write_trace,
)

import oracles
from helpers import snapshots_for_pcs


def feed(pcs, k, p):
    s = LabelWaveStopper(StopperConfig(k=k, patience=p))
    out = []
    for epoch, pc in enumerate(pcs):
        d = s.observe(pc, epoch)
        out.append(d)
        if d.verdict == "halt":
            break
    return s, out


def test_config_validation():
    for bad in ({"k": 0}, {"patience": 0}, {"steps_per_check": 0}, {"k": 1.5}):
        with pytest.raises(ConfigError):
            StopperConfig(**bad)
    assert StopperConfig() == StopperConfig(k=3, patience=10, steps_per_check=1)


def test_hand_trace_k1_p2():
    s, ds = feed([5, 4, 3, 4, 5, 6], k=1, p=2)
    assert [d.verdict for d in ds] == ["new-best", "new-best", "new-best", "worsened", "halt"]
    assert ds[3].counter == 1 and ds[4].counter == 2
    assert s.best_epoch == 2
    assert s.state.best_value == 3


def test_strictly_decreasing_never_halts():
    s, ds = feed(list(range(100, 0, -1)), k=3, p=2)
    assert all(d.verdict == "new-best" for d in ds)
    assert s.best_epoch == 99
    assert not s.halted


def test_constant_equality_counts_as_worsening():
    s, ds = feed([7] * 10, k=1, p=3)
    assert [d.verdict for d in ds] == ["new-best", "worsened", "worsened", "halt"]
    assert s.best_epoch == 0


def test_patience_resets_on_improvement():
    _, ds = feed([5, 6, 6, 4, 6, 6, 6], k=1, p=3)
    assert [d.counter for d in ds] == [0, 1, 2, 0, 1, 2, 3]
    assert ds[-1].verdict == "halt"


def test_non_monotone_epoch_is_protocol_error():
    s = LabelWaveStopper()
    s.observe(3, 5)
    with pytest.raises(ProtocolError):
        s.observe(2, 5)
    with pytest.raises(ProtocolError):
        s.observe(2, 4)


def test_observe_after_halt_is_protocol_error():
    s, _ = feed([1, 1], k=1, p=1)
    assert s.halted
    with pytest.raises(ProtocolError):
        s.observe(0, 10)


def test_checkpoint_ref_follows_best():
    s = LabelWaveStopper(StopperConfig(k=1, patience=5))
    for epoch, pc in enumerate([9, 5, 7, 3, 8]):
        s.observe(pc, epoch, checkpoint_ref=f"theta@{epoch}")
    assert s.best_ref == "theta@3"


def test_observe_snapshot_first_is_none():
    s = LabelWaveStopper()
    assert s.observe_snapshot(PredictionSnapshot(0, np.array([0, 1]))) is None
    d = s.observe_snapshot(PredictionSnapshot(1, np.array([1, 1])))
    assert d.smoothed_value == 1.0


def test_trace_identical_snapshots():
    trace = [PredictionSnapshot(t, np.array([0, 1, 2])) for t in range(20)]
    res = run_over_trace(trace, StopperConfig(k=3, patience=4))
    assert np.all(res.pc == 0)
    assert res.best_epoch == 1
    assert res.halt_epoch == 5


def test_trace_engineered_pc():
    pcs = [9, 6, 4, 5, 6, 7, 8]
    trace = snapshots_for_pcs(pcs)
    res = run_over_trace(trace, StopperConfig(k=2, patience=3))
    np.testing.assert_array_equal(res.pc, pcs)
    np.testing.assert_allclose(res.smoothed, [9, 7.5, 5, 4.5, 5.5, 6.5, 7.5])
    # the 4.5 is the fourth PC value, i.e. trace epoch 4
    assert res.best_epoch == 4
    assert res.best_value == 4.5
    assert res.halt_epoch == 7


def test_trace_needs_two_snapshots():
    with pytest.raises(InsufficientDataError):
        run_over_trace([PredictionSnapshot(0, np.array([1]))])


def test_steps_per_check_subsamples():
    trace = snapshots_for_pcs([1, 2, 3, 4, 5, 6])
    res = run_over_trace(trace, StopperConfig(k=1, patience=5, steps_per_check=2))
    np.testing.assert_array_equal(res.epochs, [2, 4, 6])


@given(st.lists(st.integers(0, 30), min_size=1, max_size=60), st.integers(1, 5), st.integers(1, 6))
def test_replay_equals_incremental(pcs, k, p):
    trace = snapshots_for_pcs(pcs, n=40)
    res = run_over_trace(trace, StopperConfig(k=k, patience=p))
    s, ds = feed(pcs, k=k, p=p)
    assert res.best_epoch - 1 == s.best_epoch
    assert [d.verdict for d in res.decisions] == [d.verdict for d in ds]


@given(st.lists(st.integers(0, 50), min_size=1, max_size=80), st.integers(1, 6), st.integers(1, 8))
def test_matches_literal_loop(pcs, k, p):
    expected = oracles.label_wave_literal(pcs, k, p)
    res = run_pc_series(pcs, list(range(1, len(pcs) + 1)), StopperConfig(k=k, patience=p))
    assert (res.best_epoch, res.best_value, res.halt_epoch) == expected


@given(st.lists(st.integers(0, 50), min_size=1, max_size=80), st.integers(1, 6), st.integers(1, 8))
def test_halt_invariants(pcs, k, p):
    res = run_pc_series(pcs, list(range(len(pcs))), StopperConfig(k=k, patience=p))
    seen = res.smoothed[: len(res.decisions)]
    # earliest argmin of the observed smoothed prefix
    assert res.best_epoch == int(np.argmin(seen))
    if res.halt_epoch is not None:
        tail = seen[-p:]
        assert len(res.decisions) - 1 - res.best_epoch == p
        assert np.all(tail >= res.best_value)
    for d in res.decisions:
        assert 0 <= d.counter <= p


def test_read_write_trace_roundtrip(tmp_path):
    trace = snapshots_for_pcs([3, 1, 2], n=6)
    path = tmp_path / "trace.jsonl"
    write_trace(path, trace)
    back = read_trace(path)
    assert [s.epoch for s in back] == [0, 1, 2, 3]
    for a, b in zip(trace, back):
        np.testing.assert_array_equal(a.labels, b.labels)


@pytest.mark.parametrize(
    "text, line",
    [
        ('{"epoch": 0, "predictions": [1, 2]}\nnot json\n', 2),
        ('{"epoch": 0, "predictions": [1, 2]}\n{"epoch": 1, "predictions": [1]}\n', 2),
        ('{"epoch": 1, "predictions": [1, 2]}\n{"epoch": 1, "predictions": [1, 2]}\n', 2),
        ('{"epoch": 0, "preds": [1]}\n', 1),
        ('{"epoch": 0, "predictions": [1, -2]}\n', 1),
        ("", 1),
    ],
)
def test_read_trace_errors(tmp_path, text, line):
    path = tmp_path / "bad.jsonl"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        read_trace(path)
    assert info.value.line == line


def test_initial_state():
    s = LabelWaveStopper()
    assert s.state.best_value == math.inf
    assert s.best_epoch is None
