from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

from .baselines import EDGE_POLICIES, run_afgsm, run_edge_policy_ablation, run_fgsm
from .tdgia import AttackResult, run_tdgia

# (surrogate, dataset, budget, config, *, progress) -> AttackResult
AttackRunner = Callable[..., AttackResult]


@dataclass(frozen=True)
class AttackMethod:
    key: str
    display: str
    run: AttackRunner


METHODS: list[AttackMethod] = [
    AttackMethod(key="tdgia", display="TDGIA (defective edges, smooth features)", run=run_tdgia),
    AttackMethod(key="fgsm", display="FGSM (random edges, one shot)", run=run_fgsm),
    AttackMethod(key="afgsm", display="AFGSM (random edges, sequential)", run=run_afgsm),
] + [
    AttackMethod(
        key=f"ablation:{policy}",
        display=f"Edge ablation ({policy} edges, smooth features)",
        run=partial(run_edge_policy_ablation, policy),
    )
    for policy in EDGE_POLICIES
]


def method_keys() -> list[str]:
    return [m.key for m in METHODS]


def method_by_key(key: str) -> AttackMethod:
    for m in METHODS:
        if m.key == key:
            return m
    raise KeyError(key)
