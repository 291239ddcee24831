"""Closed-form two-device time model for full-graph vs mini-batch training.

Per iteration ``t_cal = (b*beta + b) / C``; ``t_comm = b / H`` for mini-batch
and ``(b*beta + b) / H`` for full-graph; total ``n_iters * (t_cal + t_comm)``.
This is a rough, uncalibrated model: it only expresses the compute vs
bandwidth trade-off, not any measured system.
"""

import math
from dataclasses import dataclass

from gnnlab.errors import InputError

MODES = ("full", "mini")


@dataclass(frozen=True)
class HardwareProfile:
    compute_C: float
    bandwidth_H: float

    def __post_init__(self):
        for name in ("compute_C", "bandwidth_H"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InputError(f"{name} must be positive and finite")


@dataclass(frozen=True)
class CostEstimate:
    t_cal: float
    t_comm: float
    total: float
    mode: str


def iteration_cost(b, beta, profile, mode):
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}")
    if b <= 0 or beta <= 0:
        raise InputError("b and beta must be positive")
    work = b * beta + b
    t_cal = work / profile.compute_C
    t_comm = (work if mode == "full" else b) / profile.bandwidth_H
    return t_cal, t_comm


def estimate(b, beta, n_iters, profile, mode):
    if n_iters <= 0:
        raise InputError("n_iters must be positive")
    t_cal, t_comm = iteration_cost(b, beta, profile, mode)
    return CostEstimate(t_cal, t_comm, n_iters * (t_cal + t_comm), mode)


def crossover_bandwidth(full_cfg, mini_cfg, compute_C):
    """Bandwidth H* at which both configurations take equal total time.

    Each config is ``(b, beta, n_iters)``. With F(H) = a_f + c_f/H and
    M(H) = a_m + c_m/H the equality is linear in 1/H. Returns None when one
    regime is never slower than the other for every H > 0.
    """
    (bf, betaf, nf), (bm, betam, nm) = full_cfg, mini_cfg
    if compute_C <= 0:
        raise InputError("compute_C must be positive")
    a_f = nf * (bf * betaf + bf) / compute_C
    c_f = nf * (bf * betaf + bf)
    a_m = nm * (bm * betam + bm) / compute_C
    c_m = nm * bm
    dc = c_f - c_m
    da = a_m - a_f
    if dc == 0:
        return None
    inv_h = da / dc
    if not inv_h > 0:
        return None
    return 1.0 / inv_h
