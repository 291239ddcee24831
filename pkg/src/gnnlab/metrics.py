"""Convergence metrics: targets derived from a reference trace, crossings, throughput.

Window variance is the population variance (divide by the window length).
Crossings are only detected at iterations where the quantity was sampled;
there is no interpolation between samples.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from gnnlab.errors import InputError, NotDerivableError

WINDOW = 100
LOSS_VAR_THRESHOLD = 5e-4
ACC_VAR_THRESHOLD = 4e-4

METRIC_COLUMNS = ["run_id", "b", "beta", "eta", "seed", "itr2loss", "itr2acc", "time2acc_s", "throughput"]


@dataclass(frozen=True)
class TargetSpec:
    kind: str  # "loss" or "accuracy"
    value: float
    provenance: str = "explicit"
    window: int = None
    var_threshold: float = None

    def __post_init__(self):
        if self.kind not in ("loss", "accuracy"):
            raise InputError(f"unknown target kind {self.kind!r}")
        if not math.isfinite(self.value):
            raise InputError("target value must be finite")


@dataclass(frozen=True)
class MetricReport:
    iteration_to_loss: int = None
    iteration_to_accuracy: int = None
    time_to_accuracy: float = None
    throughput: float = None


def _values(samples):
    return np.array([v for _, v in samples], dtype=np.float64)


def _first_stable_window(values, window, threshold):
    for start in range(values.size - window + 1):
        seg = values[start:start + window]
        if np.var(seg) < threshold:
            return seg
    return None


def derive_target_loss(trajectory, window=WINDOW, var_threshold=LOSS_VAR_THRESHOLD):
    """Max full-graph loss over the first ``window`` consecutive samples whose variance is below threshold."""
    values = _values(trajectory.loss_samples())
    if values.size < window:
        raise NotDerivableError(f"need at least {window} loss samples, have {values.size}")
    seg = _first_stable_window(values, window, var_threshold)
    if seg is None:
        raise NotDerivableError("no loss window has variance below the threshold")
    return TargetSpec("loss", float(seg.max()), "derived", window, var_threshold)


def derive_target_accuracy(trajectory, window=WINDOW, var_threshold=ACC_VAR_THRESHOLD):
    """Min accuracy over the first stable window of accuracy samples."""
    values = _values(trajectory.accuracy_samples())
    if values.size < window:
        raise NotDerivableError(f"need at least {window} accuracy samples, have {values.size}")
    seg = _first_stable_window(values, window, var_threshold)
    if seg is None:
        raise NotDerivableError("no accuracy window has variance below the threshold")
    return TargetSpec("accuracy", float(seg.min()), "derived", window, var_threshold)


def iteration_to(trajectory, target):
    """First 1-based iteration at which the target is met, or None."""
    if target.kind == "loss":
        for t, v in trajectory.loss_samples():
            if v <= target.value:
                return t
    else:
        for t, v in trajectory.accuracy_samples():
            if v >= target.value:
                return t
    return None


def time_to(trajectory, target):
    t = iteration_to(trajectory, target)
    return None if t is None else trajectory.elapsed_s[t - 1]


def throughput(trajectory):
    """Target nodes processed per second over the whole run."""
    if len(trajectory) == 0 or not trajectory.elapsed_s[-1] > 0:
        raise InputError("throughput needs a positive elapsed time")
    return trajectory.nodes_processed[-1] / trajectory.elapsed_s[-1]


def report(trajectory, loss_target=None, acc_target=None):
    return MetricReport(
        iteration_to_loss=None if loss_target is None else iteration_to(trajectory, loss_target),
        iteration_to_accuracy=None if acc_target is None else iteration_to(trajectory, acc_target),
        time_to_accuracy=None if acc_target is None else time_to(trajectory, acc_target),
        throughput=throughput(trajectory),
    )


def format_metric_rows(rows):
    """CSV text for metric rows (dicts keyed by METRIC_COLUMNS), sorted by run_id."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for row in sorted(rows, key=lambda r: r["run_id"]):
        w.writerow([_fmt(row[c]) for c in METRIC_COLUMNS])
    return buf.getvalue()


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def read_metric_rows(text):
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        missing = [c for c in METRIC_COLUMNS if c not in raw]
        if missing:
            raise InputError(f"metrics CSV lacks columns {missing}")
        row = {"run_id": raw["run_id"]}
        for c in ("b", "beta", "seed", "itr2loss", "itr2acc"):
            row[c] = int(raw[c]) if raw[c] != "" else None
        for c in ("eta", "time2acc_s", "throughput"):
            row[c] = float(raw[c]) if raw[c] != "" else None
        rows.append(row)
    return rows
