"""Overlap accuracy and edit-usability metrics with session logging.

Overlap is Jaccard-style: TP/(TP+FP+FN). Edit metrics reduce a logged
session to manipulation (seconds per move), effort (duration times
manipulation) and efficiency (overlap gain per hundred units of effort).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NoActions, ZeroEffort


@dataclass(frozen=True)
class OverlapReport:
    tp: int
    fp: int
    fn: int
    theta: float

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "theta": self.theta}


def overlap(pred: np.ndarray, truth: np.ndarray) -> OverlapReport:
    """Pixelwise overlap of two binary masks.

    Both-empty counts as a perfect match (the ratio is 0/0 there).
    """
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise DimensionMismatch(
            f"mask dims differ: {pred.shape} vs {truth.shape}"
        )
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    denom = tp + fp + fn
    theta = 1.0 if denom == 0 else tp / denom
    return OverlapReport(tp=tp, fp=fp, fn=fn, theta=theta)


@dataclass(frozen=True)
class MoveEvent:
    """One completed drag of a master point."""

    timestamp_ms: float
    index: int
    old_xy: tuple
    new_xy: tuple


@dataclass
class EditSession:
    """Ordered move events plus the bookkeeping the metrics need.

    Duration runs from the first move's timestamp to the export
    timestamp; with no export recorded it falls back to the last move.
    """

    events: list = field(default_factory=list)
    export_timestamp_ms: float | None = None
    theta_before: float | None = None
    theta_after: float | None = None

    @property
    def moves(self) -> int:
        return len(self.events)

    @property
    def duration(self) -> float:
        """Elapsed seconds, first interaction to export."""
        if not self.events:
            return 0.0
        start = self.events[0].timestamp_ms
        end = self.export_timestamp_ms
        if end is None:
            end = self.events[-1].timestamp_ms
        return (end - start) / 1000.0

    def record_move(self, timestamp_ms, index, old_xy, new_xy):
        if self.events and timestamp_ms < self.events[-1].timestamp_ms:
            raise ValueError("timestamps must be non-decreasing")
        self.events.append(MoveEvent(
            timestamp_ms=float(timestamp_ms), index=int(index),
            old_xy=(float(old_xy[0]), float(old_xy[1])),
            new_xy=(float(new_xy[0]), float(new_xy[1])),
        ))

    def record_export(self, timestamp_ms):
        timestamp_ms = float(timestamp_ms)
        if self.events and timestamp_ms < self.events[-1].timestamp_ms:
            raise ValueError("export timestamp precedes the last move")
        self.export_timestamp_ms = timestamp_ms


def manipulation(session: EditSession) -> float:
    """Mean seconds per move."""
    if session.moves == 0:
        raise NoActions("no move events recorded")
    return session.duration / session.moves


def effort(session: EditSession) -> float:
    """Duration times manipulation: duration squared over move count."""
    if session.moves == 0:
        raise NoActions("no move events recorded")
    return session.duration ** 2 / session.moves


def efficiency(session: EditSession) -> float:
    """Overlap gain, in percent, per unit effort. Sign is preserved."""
    e = effort(session)
    if e == 0:
        raise ZeroEffort("effort is zero; efficiency undefined")
    if session.theta_before is None or session.theta_after is None:
        raise ValueError("efficiency needs overlap before and after")
    return (session.theta_after - session.theta_before) * 100.0 / e


def write_event_log(session: EditSession) -> str:
    """Line-delimited session log for offline recomputation.

    Lines: "move <ms> <index> <old_x> <old_y> <new_x> <new_y>",
    "export <ms>", "theta_before <v>", "theta_after <v>".
    """
    lines = []
    for ev in session.events:
        lines.append(
            "move {!r} {} {!r} {!r} {!r} {!r}".format(
                ev.timestamp_ms, ev.index,
                ev.old_xy[0], ev.old_xy[1], ev.new_xy[0], ev.new_xy[1],
            )
        )
    if session.export_timestamp_ms is not None:
        lines.append("export {!r}".format(session.export_timestamp_ms))
    if session.theta_before is not None:
        lines.append("theta_before {!r}".format(session.theta_before))
    if session.theta_after is not None:
        lines.append("theta_after {!r}".format(session.theta_after))
    return "\n".join(lines) + "\n"


def read_event_log(text: str) -> EditSession:
    session = EditSession()
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        kind, *rest = line.split()
        if kind == "move":
            ts, idx, ox, oy, nx, ny = rest
            session.record_move(
                float(ts), int(idx),
                (float(ox), float(oy)), (float(nx), float(ny)),
            )
        elif kind == "export":
            session.record_export(float(rest[0]))
        elif kind == "theta_before":
            session.theta_before = float(rest[0])
        elif kind == "theta_after":
            session.theta_after = float(rest[0])
        else:
            raise ValueError(f"unknown log record: {kind}")
    return session


def summarize(thetas) -> dict:
    """Mean, sd, min, max of a batch of overlap values."""
    arr = np.asarray(list(thetas), dtype=float)
    if arr.size == 0:
        raise NoActions("empty batch")
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "min": float(arr.min()),
        "max": float(arr.max()),
    }
