from __future__ import annotations

import logging

import numpy as np
from tqdm import tqdm

from ..errors import ConstructionError, NumericalError
from ..graph.dataset import Dataset
from .adam import Adam
from .layers import backward_pass, forward_pass
from .model import Model, _check_dims, init_model, log_softmax
from .spec import ModelSpec, TrainConfig

log = logging.getLogger(__name__)


def accuracy_on(logits: np.ndarray, labels: np.ndarray, idx: np.ndarray) -> float:
    return float((np.argmax(logits[idx], axis=1) == labels[idx]).mean())


def train(
    spec: ModelSpec,
    dataset: Dataset,
    config: TrainConfig,
    *,
    progress: bool = False,
) -> Model:
    """Cross-entropy training with Adam; returns the best-validation snapshot."""
    if dataset.train.size == 0 or dataset.val.size == 0:
        raise ConstructionError("train and val splits must be non-empty")
    model = init_model(spec, dataset.dim, dataset.num_classes, config.seed)
    _check_dims(model, dataset.features)
    params = {k: v.copy() for k, v in model.params.items()}
    prop = model.propagator(dataset)
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(config.lr, config.beta1, config.beta2, config.eps)

    x = dataset.features
    train_idx = dataset.train
    y_train = dataset.labels[train_idx]
    onehot = np.zeros((train_idx.size, dataset.num_classes))
    onehot[np.arange(train_idx.size), y_train] = 1.0

    best_acc = -1.0
    best_epoch = 0
    best = {k: v.copy() for k, v in params.items()}

    for epoch in tqdm(range(1, config.epochs + 1), desc=f"train {spec.architecture}", disable=not progress):
        logits, caches = forward_pass(spec, params, x, prop, dropout_rate=config.dropout_rate, rng=rng)
        logp = log_softmax(logits[train_idx])
        loss = -float((logp * onehot).sum() / train_idx.size)
        if config.weight_decay:
            loss += 0.5 * config.weight_decay * sum(float((v * v).sum()) for k, v in params.items() if "W" in k)
        if not np.isfinite(loss):
            raise NumericalError("train", f"non-finite loss {loss}", epoch=epoch, lr=config.lr)

        dlogits = np.zeros_like(logits)
        dlogits[train_idx] = (np.exp(logp) - onehot) / train_idx.size
        grads, _ = backward_pass(spec, params, caches, prop, dlogits)
        if config.weight_decay:
            for k in grads:
                if "W" in k:
                    grads[k] = grads[k] + config.weight_decay * params[k]
        opt.step(params, grads)

        if epoch % config.eval_interval == 0 or epoch == config.epochs:
            eval_logits, _ = forward_pass(spec, params, x, prop)
            acc = accuracy_on(eval_logits, dataset.labels, dataset.val)
            log.debug("epoch %d loss %.4f val_acc %.4f", epoch, loss, acc)
            if acc > best_acc:
                best_acc, best_epoch = acc, epoch
                best = {k: v.copy() for k, v in params.items()}

    log.info("trained %s: best val acc %.4f at epoch %d", spec.architecture, best_acc, best_epoch)
    return Model(spec, best, dataset.dim, dataset.num_classes).frozen()
