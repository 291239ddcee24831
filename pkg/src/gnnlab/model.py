"""One-layer GNN z_i = s * relu(a_i X W^T), its losses and analytic gradients.

The ReLU derivative uses a strict indicator ``1{a_i X W^T > 0}``, so the
subgradient at exactly zero is zero.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from gnnlab.errors import InputError
from gnnlab.graph import AdjRows

MSE = "mse"
CE = "ce"
LOSS_KINDS = (MSE, CE)
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class ModelParams:
    W: np.ndarray
    kappa: float
    v: np.ndarray = None
    activation_scale: float = 1.0

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 1:
            raise InputError("W must be an h x r matrix with h >= 1")
        object.__setattr__(self, "W", W)
        if self.v is not None:
            v = np.asarray(self.v, dtype=np.float64)
            if v.shape != (W.shape[0],) or not np.all(np.abs(v) == 1.0) or v.sum() != 0:
                raise InputError("v must be a +-1 vector of length h summing to zero")
            object.__setattr__(self, "v", v)

    @property
    def h(self):
        return self.W.shape[0]

    def with_weights(self, W):
        return replace(self, W=W)


def init_gaussian(h, r, kappa, seed, ce_head=False, activation_scale=1.0):
    """W with i.i.d. N(0, kappa^2) entries; ``ce_head`` adds v = (+1,..,+1,-1,..,-1)."""
    if h < 1 or r < 1:
        raise InputError("h and r must be >= 1")
    if not kappa > 0:
        raise InputError("kappa must be positive")
    W = np.random.default_rng(seed).normal(0.0, kappa, size=(h, r))
    v = None
    if ce_head:
        if h % 2:
            raise InputError("the CE head needs an even hidden dimension")
        v = np.concatenate([np.ones(h // 2), -np.ones(h // 2)])
    return ModelParams(W, kappa, v, activation_scale)


def one_hot(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, num_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def to_pm1(labels):
    """Map binary labels {0, 1} to {-1, +1}."""
    labels = np.asarray(labels)
    if labels.size and not np.all((labels == 0) | (labels == 1)):
        raise InputError("CE needs binary labels in {0, 1}")
    return 2.0 * labels - 1.0


def _aggregate(adj_rows, features):
    if isinstance(adj_rows, AdjRows):
        if adj_rows.width != features.shape[0]:
            raise InputError("adjacency width does not match the number of feature rows")
        return adj_rows.aggregate(features)
    return np.asarray(adj_rows, dtype=np.float64)


def _pre(agg, params):
    if agg.shape[1] != params.W.shape[1]:
        raise InputError(f"feature dimension {agg.shape[1]} != W columns {params.W.shape[1]}")
    return agg @ params.W.T


def forward(adj_rows, features, params):
    agg = _aggregate(adj_rows, features)
    return params.activation_scale * np.maximum(_pre(agg, params), 0.0)


def loss_mse(Z, labels_onehot):
    Z = np.asarray(Z)
    Y = np.asarray(labels_onehot)
    if Z.shape != Y.shape:
        raise InputError(f"output width {Z.shape} does not match one-hot labels {Y.shape}")
    return 0.5 * float(np.sum((Z - Y) ** 2)) / Z.shape[0]


def _check_pm1(y):
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.abs(y) == 1.0):
        raise InputError("CE labels must be -1 or +1")
    return y


def loss_ce(Z, v, labels_pm1):
    """Mean of log(1 + exp(-y * z.v)), evaluated as a softplus."""
    y = _check_pm1(labels_pm1)
    yhat = np.asarray(Z) @ np.asarray(v)
    return float(np.mean(np.logaddexp(0.0, -y * yhat)))


def mse_loss_and_grad(agg, params, labels):
    """Loss and gradient for integer class labels, given aggregated features ``agg = A X``."""
    pre = _pre(agg, params)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= params.h):
        raise InputError("MSE needs h equal to the number of classes")
    active = pre > 0
    s = params.activation_scale
    Z = s * np.where(active, pre, 0.0)
    Y = one_hot(labels, params.h)
    m = agg.shape[0]
    resid = Z - Y
    loss = 0.5 * float(np.sum(resid**2)) / m
    grad = ((resid * s) * active).T @ agg / m
    return loss, grad


def ce_loss_and_grad(agg, params, labels_pm1):
    if params.v is None:
        raise InputError("CE needs a model with a fixed output vector v")
    y = _check_pm1(labels_pm1)
    pre = _pre(agg, params)
    active = pre > 0
    s = params.activation_scale
    Z = s * np.where(active, pre, 0.0)
    margin = y * (Z @ params.v)
    loss = float(np.mean(np.logaddexp(0.0, -margin)))
    # d/du log(1 + e^-u) = -sigmoid(-u)
    coef = -expit(-margin) * y / agg.shape[0]
    grad = ((coef[:, None] * params.v[None, :]) * s * active).T @ agg
    return loss, grad


def grad_mse(adj_rows, features, params, labels):
    return mse_loss_and_grad(_aggregate(adj_rows, features), params, labels)[1]


def grad_ce(adj_rows, features, params, labels):
    return ce_loss_and_grad(_aggregate(adj_rows, features), params, labels)[1]


def loss_and_grad(kind, agg, params, labels):
    """Dispatch on loss kind; ``labels`` are class ids for MSE and +-1 for CE."""
    if kind == MSE:
        return mse_loss_and_grad(agg, params, labels)
    if kind == CE:
        return ce_loss_and_grad(agg, params, labels)
    raise InputError(f"unknown loss kind {kind!r}")
