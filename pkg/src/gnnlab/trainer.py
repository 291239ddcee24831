"""Full-graph GD and mini-batch SGD loops plus the closed-form step-size calculators."""

import csv
import io
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from gnnlab.errors import DivergenceError, InputError
from gnnlab.graph import normalized_rows_full
from gnnlab.model import CE, LOSS_KINDS, MSE, forward, loss_and_grad, to_pm1
from gnnlab.sampling import SamplerConfig, sample_minibatch
from gnnlab.simulator import HardwareProfile, iteration_cost

DIVERGENCE_LOSS = 1e6
DEFAULT_C4 = 1.0
# must stay below 1/6 for the MSE interval to be nonempty
DEFAULT_C6 = 0.1


@dataclass(frozen=True)
class ModelClock:
    """Deterministic clock charging each iteration the analytic cost model time."""

    compute: float = 1e6
    bandwidth: float = 1e6

    def step_seconds(self, b, beta, full):
        t_cal, t_comm = iteration_cost(b, beta, HardwareProfile(self.compute, self.bandwidth),
                                       "full" if full else "mini")
        return t_cal + t_comm


@dataclass(frozen=True)
class TrainConfig:
    loss: str = MSE
    sampler: SamplerConfig = None  # None means full-graph GD
    eta: object = 0.05  # float, or "theoretical"
    max_iters: int = 1000
    target_loss: float = None
    eval_every: int = 10
    loss_every: int = 1
    seed: int = 0
    clock: object = None  # None = wall clock, else a ModelClock
    C4: float = DEFAULT_C4
    C6: float = DEFAULT_C6

    @property
    def mode(self):
        return "full" if self.sampler is None else "mini"


@dataclass
class Trajectory:
    """Per-iteration record; ``None`` marks iterations where a value was not sampled."""

    mode: str
    b: int
    beta: int
    eta: float
    initial_loss: float
    batch_loss: list = field(default_factory=list)
    full_loss: list = field(default_factory=list)
    test_acc: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    nodes_processed: list = field(default_factory=list)
    final_W: np.ndarray = None
    stopped_early: bool = False

    def __len__(self):
        return len(self.full_loss)

    def loss_samples(self):
        return [(t + 1, v) for t, v in enumerate(self.full_loss) if v is not None]

    def accuracy_samples(self):
        return [(t + 1, v) for t, v in enumerate(self.test_acc) if v is not None]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "batch_loss", "full_loss", "test_acc", "elapsed_s", "nodes_processed"])
        for t in range(len(self)):
            w.writerow([t + 1, _cell(self.batch_loss[t]), _cell(self.full_loss[t]),
                        _cell(self.test_acc[t]), _cell(self.elapsed_s[t]), self.nodes_processed[t]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, mode="unknown", b=0, beta=0, eta=float("nan")):
        rows = list(csv.DictReader(io.StringIO(text)))
        traj = cls(mode, b, beta, eta, float("nan"))
        for row in rows:
            traj.batch_loss.append(_parse(row["batch_loss"]))
            traj.full_loss.append(_parse(row["full_loss"]))
            traj.test_acc.append(_parse(row["test_acc"]))
            traj.elapsed_s.append(_parse(row["elapsed_s"]))
            traj.nodes_processed.append(int(row["nodes_processed"]))
        return traj


def _cell(x):
    return "" if x is None else repr(float(x))


def _parse(s):
    return None if s == "" else float(s)


def task_labels(graph, kind, nodes):
    labels = graph.labels[nodes]
    if kind == CE:
        if graph.num_classes != 2:
            raise InputError("CE training is binary: the graph must have exactly 2 classes")
        return to_pm1(labels)
    return labels


def predict(graph, params, kind, nodes):
    Z = forward(normalized_rows_full(graph, nodes), graph.features, params)
    if kind == CE:
        return (Z @ params.v > 0).astype(np.int64)
    return np.argmax(Z, axis=1)


def accuracy(graph, params, loss_kind, on="test"):
    """Fraction of correct predictions on the test or train split.

    MSE decodes by argmax (ties go to the lowest class index); CE by the sign
    of the readout with 0 counted as the negative class.
    """
    if on not in ("test", "train"):
        raise InputError("accuracy is evaluated on 'test' or 'train'")
    nodes = graph.test_ids if on == "test" else graph.train_ids
    if nodes.size == 0:
        raise InputError(f"the {on} split is empty")
    return float(np.mean(predict(graph, params, loss_kind, nodes) == graph.labels[nodes]))


def resolve_eta(graph, params, config):
    if config.eta != "theoretical":
        eta = float(config.eta)
        if eta < 0 or not math.isfinite(eta):
            raise InputError("learning rate must be a finite non-negative number")
        return eta
    n_train = graph.n_train
    if config.sampler is None:
        b, beta = n_train, graph.d_max
    else:
        b, beta = config.sampler.b, config.sampler.beta
    if config.loss == MSE:
        if config.sampler is None:
            lo, hi = theoretical_lr_mse_full(n_train, beta, config.C6)
        else:
            lo, hi = theoretical_lr_mse_mini(n_train, b, beta, config.C6)
        return 0.5 * (lo + hi)
    return theoretical_lr_ce_mini(n_train, b, beta, params.h, config.C4)


def train(graph, params, config):
    """Run GD (full) or SGD (mini) from ``params`` and record the trajectory.

    Stops once the full-graph training loss is at or below ``target_loss`` or
    after ``max_iters`` updates. Raises DivergenceError on a non-finite loss or
    one above 1e6.
    """
    if config.loss not in LOSS_KINDS:
        raise InputError(f"unknown loss {config.loss!r}")
    if config.max_iters < 1 or config.eval_every < 1 or config.loss_every < 1:
        raise InputError("max_iters, eval_every and loss_every must be >= 1")
    if config.loss == MSE and params.h != graph.num_classes:
        raise InputError(f"MSE needs h = K = {graph.num_classes}, got h = {params.h}")
    if config.loss == CE and params.v is None:
        raise InputError("CE training needs a model initialized with the output vector v")
    if config.sampler is not None:
        config.sampler.validate(graph)
    eta = resolve_eta(graph, params, config)

    train_ids = graph.train_ids
    X = graph.features
    full_agg = normalized_rows_full(graph, train_ids).aggregate(X)
    full_labels = task_labels(graph, config.loss, train_ids)
    have_test = graph.n_test > 0

    full = config.sampler is None
    b = graph.n_train if full else config.sampler.b
    beta = graph.d_max if full else config.sampler.beta
    step_cost = config.clock.step_seconds(b, beta, full) if config.clock is not None else None

    W = params.W.copy()
    initial_loss, _ = loss_and_grad(config.loss, full_agg, params, full_labels)
    traj = Trajectory(config.mode, b, beta, eta, initial_loss)
    elapsed = 0.0
    processed = 0
    for it in range(1, config.max_iters + 1):
        current = params.with_weights(W)
        start = time.perf_counter()
        if full:
            batch_loss, grad = loss_and_grad(config.loss, full_agg, current, full_labels)
        else:
            mb = sample_minibatch(graph, config.sampler, it)
            agg = mb.adj.aggregate(X)
            labels = task_labels(graph, config.loss, mb.target_nodes)
            batch_loss, grad = loss_and_grad(config.loss, agg, current, labels)
        _check_finite(it, batch_loss)
        W = W - eta * grad
        elapsed += step_cost if step_cost is not None else time.perf_counter() - start
        processed += b

        updated = params.with_weights(W)
        full_loss = None
        if config.loss_every == 1 or it % config.loss_every == 0 or it == config.max_iters:
            full_loss = loss_and_grad(config.loss, full_agg, updated, full_labels)[0]
            _check_finite(it, full_loss)
        acc = None
        if have_test and (it % config.eval_every == 0):
            acc = accuracy(graph, updated, config.loss, "test")

        traj.batch_loss.append(None if full else batch_loss)
        traj.full_loss.append(full_loss)
        traj.test_acc.append(acc)
        traj.elapsed_s.append(elapsed)
        traj.nodes_processed.append(processed)
        if config.target_loss is not None and full_loss is not None and full_loss <= config.target_loss:
            traj.stopped_early = True
            break
    traj.final_W = W
    return traj


def _check_finite(it, loss):
    if not math.isfinite(loss) or loss > DIVERGENCE_LOSS:
        raise DivergenceError(it, loss)


def theoretical_lr_mse_mini(n_train, b, beta, C6=DEFAULT_C6, C2=1.0):
    """Step-size interval [C6 beta^3 / (pi n b^2), b / (6 pi beta n)] for mini-batch MSE.

    Warns when the fan-out falls outside beta <= C2 * b^(3/4).
    """
    if min(n_train, b, beta) <= 0:
        raise InputError("n_train, b and beta must be positive")
    if beta > C2 * b**0.75:
        warnings.warn(f"beta={beta} exceeds C2*b^(3/4)={C2 * b**0.75:.4g}; interval may not apply",
                      stacklevel=2)
    lo = C6 * beta**3 / (math.pi * n_train * b**2)
    hi = b / (6 * math.pi * beta * n_train)
    if lo > hi:
        raise InputError(f"empty step-size interval [{lo:.6g}, {hi:.6g}]")
    return lo, hi


def theoretical_lr_mse_full(n_train, d_max, C6=DEFAULT_C6):
    """Full-graph interval [C6 d^3 / (pi n^3), 1 / (6 pi d)]."""
    if n_train <= 0 or d_max <= 0:
        raise InputError("n_train and d_max must be positive")
    lo = C6 * d_max**3 / (math.pi * n_train**3)
    hi = 1.0 / (6 * math.pi * d_max)
    if lo > hi:
        raise InputError(f"empty step-size interval [{lo:.6g}, {hi:.6g}]")
    return lo, hi


def theoretical_lr_ce_mini(n_train, b, beta, h, C4=DEFAULT_C4):
    """CE step size b / (4 C4 beta h n_train)."""
    if min(n_train, b, beta, h, C4) <= 0:
        raise InputError("all arguments must be positive")
    return b / (4 * C4 * beta * h * n_train)


def min_hidden_dim_ce(n_train, beta, epsilon, c=1.0):
    """ceil(c * ln(n) * (n^2 + 1/epsilon) / beta); epsilon=inf drops the 1/epsilon term."""
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if beta <= 0 or n_train <= 0:
        raise InputError("n_train and beta must be positive")
    return math.ceil(c * math.log(n_train) * (n_train**2 + 1.0 / epsilon) / beta)
