"""Forward and reverse passes for the fixed architecture set.

Every layer keeps what its backward step needs in a LayerCache; backward
walks the caches in reverse and returns parameter gradients and, on
request, the gradient with respect to the input feature matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ..graph.graph import Graph, normalize_adjacency
from .spec import ModelSpec

LN_EPS = 1e-5


@dataclass(frozen=True, eq=False)
class Propagator:
    op: sp.csr_matrix
    op_t: sp.csr_matrix

    @classmethod
    def for_graph(cls, spec: ModelSpec, graph: Graph) -> "Propagator":
        scheme = "mean" if spec.architecture == "sage_mean" else "gcn_symmetric"
        op = normalize_adjacency(graph, scheme)
        return cls(op=op, op_t=sp.csr_matrix(op.T))


@dataclass
class LayerNormCache:
    xhat: np.ndarray
    inv_std: np.ndarray
    gain: np.ndarray


@dataclass
class LayerCache:
    h_in: np.ndarray  # layer input after dropout
    mask: Optional[np.ndarray]
    agg: Optional[np.ndarray]  # sage: aggregated input; sgc: propagated input
    pre_act: np.ndarray
    ln: Optional[LayerNormCache]


def layernorm_forward(z: np.ndarray, gain: np.ndarray, offset: np.ndarray) -> tuple[np.ndarray, LayerNormCache]:
    mu = z.mean(axis=1, keepdims=True)
    var = z.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (z - mu) * inv_std
    return gain * xhat + offset, LayerNormCache(xhat=xhat, inv_std=inv_std, gain=gain)


def layernorm_backward(dy: np.ndarray, c: LayerNormCache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dgain = (dy * c.xhat).sum(axis=0)
    doffset = dy.sum(axis=0)
    dxhat = dy * c.gain
    dz = c.inv_std * (
        dxhat - dxhat.mean(axis=1, keepdims=True) - c.xhat * (dxhat * c.xhat).mean(axis=1, keepdims=True)
    )
    return dz, dgain, doffset


def layer_dims(spec: ModelSpec, in_dim: int, num_classes: int) -> list[int]:
    if spec.architecture == "sgc":
        return [in_dim, num_classes]
    return [in_dim, *spec.hidden_dims, num_classes]


def param_shapes(spec: ModelSpec, in_dim: int, num_classes: int) -> dict[str, tuple[int, ...]]:
    dims = layer_dims(spec, in_dim, num_classes)
    shapes: dict[str, tuple[int, ...]] = {}
    last = len(dims) - 2
    for l, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        if spec.architecture == "sage_mean":
            shapes[f"Ws{l}"] = (a, b)
            shapes[f"Wn{l}"] = (a, b)
        else:
            shapes[f"W{l}"] = (a, b)
        shapes[f"b{l}"] = (b,)
        if spec.use_layernorm and spec.architecture != "sgc" and l < last:
            shapes[f"gain{l}"] = (b,)
            shapes[f"offset{l}"] = (b,)
    return shapes


def _dropout(h: np.ndarray, rate: float, rng: Optional[np.random.Generator]) -> tuple[np.ndarray, Optional[np.ndarray]]:
    if rng is None or rate <= 0.0:
        return h, None
    mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
    return h * mask, mask


def forward_pass(
    spec: ModelSpec,
    params: dict[str, np.ndarray],
    x: np.ndarray,
    prop: Propagator,
    *,
    dropout_rate: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> tuple[np.ndarray, list[LayerCache]]:
    """Logits for every node; rng=None means eval mode (no dropout)."""
    caches: list[LayerCache] = []

    if spec.architecture == "sgc":
        agg = x
        for _ in range(spec.sgc_k):
            agg = prop.op @ agg
        hd, mask = _dropout(agg, dropout_rate, rng)
        logits = hd @ params["W0"] + params["b0"]
        caches.append(LayerCache(h_in=hd, mask=mask, agg=agg, pre_act=logits, ln=None))
        return logits, caches

    n_layers = len(spec.hidden_dims) + 1
    h = x
    for l in range(n_layers):
        last = l == n_layers - 1
        hd, mask = _dropout(h, dropout_rate, rng)
        agg = None
        if spec.architecture == "gcn":
            z = prop.op @ (hd @ params[f"W{l}"]) + params[f"b{l}"]
        else:
            agg = prop.op @ hd
            z = hd @ params[f"Ws{l}"] + agg @ params[f"Wn{l}"] + params[f"b{l}"]
        ln = None
        if spec.use_layernorm and not last:
            z, ln = layernorm_forward(z, params[f"gain{l}"], params[f"offset{l}"])
        caches.append(LayerCache(h_in=hd, mask=mask, agg=agg, pre_act=z, ln=ln))
        h = z if last else np.maximum(z, 0.0)
    return h, caches


def backward_pass(
    spec: ModelSpec,
    params: dict[str, np.ndarray],
    caches: list[LayerCache],
    prop: Propagator,
    dlogits: np.ndarray,
    *,
    need_params: bool = True,
    need_input: bool = False,
) -> tuple[dict[str, np.ndarray], Optional[np.ndarray]]:
    grads: dict[str, np.ndarray] = {}

    if spec.architecture == "sgc":
        c = caches[0]
        if need_params:
            grads["W0"] = c.h_in.T @ dlogits
            grads["b0"] = dlogits.sum(axis=0)
        if not need_input:
            return grads, None
        g = dlogits @ params["W0"].T
        if c.mask is not None:
            g = g * c.mask
        for _ in range(spec.sgc_k):
            g = prop.op_t @ g
        return grads, g

    n_layers = len(caches)
    g = dlogits
    for l in reversed(range(n_layers)):
        c = caches[l]
        if l != n_layers - 1:
            g = g * (c.pre_act > 0)
        if c.ln is not None:
            g, dgain, doffset = layernorm_backward(g, c.ln)
            if need_params:
                grads[f"gain{l}"] = dgain
                grads[f"offset{l}"] = doffset
        if need_params:
            grads[f"b{l}"] = g.sum(axis=0)
        if spec.architecture == "gcn":
            d_xw = prop.op_t @ g
            if need_params:
                grads[f"W{l}"] = c.h_in.T @ d_xw
            if l == 0 and not need_input:
                break
            dh = d_xw @ params[f"W{l}"].T
        else:
            if need_params:
                grads[f"Ws{l}"] = c.h_in.T @ g
                grads[f"Wn{l}"] = c.agg.T @ g
            if l == 0 and not need_input:
                break
            dh = g @ params[f"Ws{l}"].T + prop.op_t @ (g @ params[f"Wn{l}"].T)
        if c.mask is not None:
            dh = dh * c.mask
        g = dh
    return grads, (g if need_input else None)
