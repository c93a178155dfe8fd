"""Mini-batch Adam training of the LRP regressor with best-validation selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptySplit
from .lrp import LrpFeatures, LrpModel, mse_and_grad, predict

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    hidden: int = 16
    lr: float = 0.1
    epochs: int = 100
    batch_size: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class EpochMetrics:
    epoch: int
    train_mse: float
    val_mse: float
    test_mse: float
    test_mse_over_variance: float


@dataclass
class TrainResult:
    model: LrpModel
    best_epoch: int
    history: list[EpochMetrics] = field(default_factory=list)

    @property
    def best(self) -> EpochMetrics:
        return self.history[self.best_epoch]


class Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {n: np.zeros_like(v) for n, v in params.items()}
        self.v = {n: np.zeros_like(v) for n, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for n, g in grads.items():
            self.m[n] = b1 * self.m[n] + (1 - b1) * g
            self.v[n] = b2 * self.v[n] + (1 - b2) * g * g
            params[n] = params[n] - self.lr * (self.m[n] / c1) / (np.sqrt(self.v[n] / c2) + self.eps)


def _mse(model: LrpModel, feats: LrpFeatures, y: np.ndarray) -> float:
    return float(np.mean((predict(model, feats) - y) ** 2))


def train_lrp(
    train: tuple[LrpFeatures, np.ndarray],
    val: tuple[LrpFeatures, np.ndarray],
    test: tuple[LrpFeatures, np.ndarray],
    config: TrainConfig,
    variance: float,
) -> TrainResult:
    """Train for ``config.epochs`` epochs and keep the parameters with the lowest validation MSE.

    ``variance`` is the label variance over the whole dataset; it normalizes
    the reported test MSE.
    """
    for name, (feats, y) in (("train", train), ("val", val), ("test", test)):
        if feats.num_graphs == 0 or len(y) == 0:
            raise EmptySplit(f"{name} split is empty")
    rng = np.random.Generator(np.random.Philox(config.seed))
    model = LrpModel.init(rng, config.hidden, train[0].k, train[0].attributed)
    opt = Adam(model.params, config.lr, config.beta1, config.beta2, config.eps)
    tr_feats, tr_y = train
    n = tr_feats.num_graphs
    history: list[EpochMetrics] = []
    best_val, best_epoch, best_model = np.inf, 0, model.copy()
    var = variance if variance > 0 else np.nan
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for s in range(0, n, config.batch_size):
            idx = perm[s : s + config.batch_size]
            _, grads = mse_and_grad(model, tr_feats.subset(idx), tr_y[idx])
            opt.step(model.params, grads)
        m = EpochMetrics(
            epoch,
            _mse(model, *train),
            _mse(model, *val),
            _mse(model, *test),
            float("nan"),
        )
        m.test_mse_over_variance = m.test_mse / var
        history.append(m)
        if m.val_mse < best_val:
            best_val, best_epoch, best_model = m.val_mse, epoch, model.copy()
        log.debug("epoch %d train %.4g val %.4g test %.4g", epoch, m.train_mse, m.val_mse, m.test_mse)
    return TrainResult(best_model, best_epoch, history)
