"""Mean-square deviation and convergence metrics."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "MSD_FLOOR_DB",
    "msd_db",
    "msd_linear",
    "to_db",
    "MsdCurve",
    "iterations_to_threshold",
    "SegmentSummary",
    "RunSummary",
    "summarize",
]

MSD_FLOOR_DB = -300.0


def to_db(linear):
    """``10 log10`` with exact zeros reported as :data:`MSD_FLOOR_DB`."""
    linear = np.asarray(linear, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(linear)
    return np.maximum(out, MSD_FLOOR_DB)


def msd_linear(w, w_o):
    """Normalised squared deviation ``||w - w_o||^2 / ||w_o||^2`` along the last axis."""
    w_o = np.asarray(getattr(w_o, "taps", w_o), dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != w_o.shape[-1]:
        raise ConfigurationError(f"weight length {w.shape[-1]} != reference length {w_o.shape[-1]}")
    ref = np.sum(w_o**2)
    if ref == 0:
        raise ConfigurationError("MSD reference vector is all zeros")
    return np.sum((w - w_o) ** 2, axis=-1) / ref


def msd_db(w, w_o):
    """Normalised MSD in dB; 0 dB for ``w = 0``, floored at -300 dB."""
    out = to_db(msd_linear(w, w_o))
    return float(out) if out.ndim == 0 else out


@dataclass
class MsdCurve:
    """MSD in dB recorded every ``decimation`` iterations.

    ``values[i]`` is the deviation after the update made at iteration
    ``i * decimation``.
    """

    values: np.ndarray
    decimation: int = 1
    trials: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.decimation < 1:
            raise ConfigurationError(f"decimation must be >= 1, got {self.decimation}")

    def __len__(self):
        return self.values.size

    @property
    def iterations(self):
        return np.arange(self.values.size) * self.decimation

    def index_of(self, iteration):
        """First recorded index at or after ``iteration``."""
        return -(-int(iteration) // self.decimation)

    @staticmethod
    def expected_length(total_iterations, decimation):
        return math.ceil(total_iterations / decimation)


def iterations_to_threshold(curve, threshold_db, hold=100, margin_db=3.0):
    """First recorded index at or below ``threshold_db`` that stays put.

    "Stays put" means the next ``hold`` recorded points (or as many as
    remain) are all at or below ``threshold_db + margin_db``.  Returns
    ``None`` when no index qualifies.
    """
    values = np.asarray(getattr(curve, "values", curve), dtype=float)
    below = np.flatnonzero(values <= threshold_db)
    limit = threshold_db + margin_db
    for i in below:
        tail = values[i + 1 : i + 1 + hold]
        if np.all(tail <= limit):
            return int(i)
    return None


@dataclass
class SegmentSummary:
    start: int
    end: int
    steady_state_db: float
    crossings: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    """Per-variant, per-segment steady-state levels and threshold crossings.

    Crossings are iteration counts measured from the start of the segment
    (``None`` if the threshold is never reached inside it).
    """

    thresholds: tuple
    variants: dict

    def steady_state(self, label, segment):
        return self.variants[label][segment].steady_state_db

    def crossing(self, label, segment, threshold=None):
        threshold = self.thresholds[0] if threshold is None else threshold
        return self.variants[label][segment].crossings[threshold]

    def table(self):
        labels = list(self.variants)
        header = ["variant", "segment", "iterations", "steady dB"]
        header += [f"to {t:g} dB" for t in self.thresholds]
        rows = []
        for label in labels:
            for k, seg in enumerate(self.variants[label]):
                row = [label, str(k + 1), f"{seg.start}-{seg.end}", f"{seg.steady_state_db:.2f}"]
                for t in self.thresholds:
                    c = seg.crossings[t]
                    row.append("-" if c is None else str(c))
                rows.append(row)
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]

        def fmt(cells):
            return "  ".join(c.ljust(w) if i < 3 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))

        lines = [fmt(header)] + [fmt(r) for r in rows]
        return "\n".join(lines)


def summarize(curves, boundaries=None, total_iterations=None, thresholds=(-30.0,), steady_fraction=0.1):
    """Summarise a set of curves segment by segment.

    ``curves`` maps labels to :class:`MsdCurve`; all must share decimation
    and length.  ``boundaries`` lists segment start iterations (default: a
    single segment).  The steady state of a segment is the mean dB value of
    its last ``steady_fraction`` of recorded points.
    """
    curves = dict(curves)
    if not curves:
        return RunSummary(tuple(thresholds), {})
    first = next(iter(curves.values()))
    dec, n = first.decimation, len(first)
    for label, c in curves.items():
        if c.decimation != dec or len(c) != n:
            raise ConfigurationError(f"curve {label!r} does not share decimation/length with the others")
    if total_iterations is None:
        total_iterations = n * dec
    starts = [0] if boundaries is None else [int(b) for b in boundaries]
    ends = starts[1:] + [int(total_iterations)]
    result = {}
    for label, c in curves.items():
        segs = []
        for start, end in zip(starts, ends):
            lo, hi = c.index_of(start), c.index_of(end)
            part = c.values[lo:hi]
            if part.size == 0:
                segs.append(SegmentSummary(start, end, float("nan"), {t: None for t in thresholds}))
                continue
            tail = max(1, int(math.ceil(steady_fraction * part.size)))
            steady = float(np.mean(part[-tail:]))
            crossings = {}
            for t in thresholds:
                idx = iterations_to_threshold(part, t)
                crossings[t] = None if idx is None else int((lo + idx) * dec - start)
            segs.append(SegmentSummary(start, end, steady, crossings))
        result[label] = segs
    return RunSummary(tuple(thresholds), result)
