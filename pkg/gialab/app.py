from __future__ import annotations
import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .attacks.registry import AttackMethod, method_by_key, method_keys
from .attacks.tdgia import AttackResult, write_attack_log
from .config import ExperimentConfig, NamedModel, load_config, save_config
from .core import write_csv
from .db import record_metrics, record_run
from .errors import EXIT_OK, BudgetError, ConfigError, GIALabError
from .evaluation.harness import EvalReport, budget_sweep, evaluate_attack, transfer_matrix
from .evaluation.metrics import accuracy
from .evaluation.report import emit_report
from .graph.dataset import Dataset, load_dataset, save_dataset, summary
from .graph.injection import Injection, load_injection, save_injection, validate_injection
from .graph.synth import synth_sbm
from .gnn.model import Model, load_model, predict_labels, save_model
from .gnn.train import train
from .logs import setup_logging
from .paths import (
    APP_NAME,
    ATTACK_LOG_FILE,
    ATTACKS_DIR,
    CLEAN_ACCURACY_FILE,
    CONFIG_ECHO,
    INJECTION_FILE,
    attack_dir,
    dataset_dir,
    eval_dir,
    ledger_path,
    model_path,
    models_dir,
    parse_attack_dir,
)

log = logging.getLogger(__name__)

# seed offsets keep every trained model on its own stream
DEFENSE_SEED_STRIDE = 1000
TRANSFER_SEED_OFFSET = 500


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gialab", description=f"{APP_NAME}: graph injection attack lab")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, default=None, help="YAML/JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="run a single seed instead of config seeds")
        sp.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")

    sp = sub.add_parser("synth", help="generate an SBM dataset")
    common(sp)
    sp.add_argument("--nodes", type=int, default=None)
    sp.add_argument("--blocks", type=int, default=None)

    sp = sub.add_parser("train", help="train the surrogate and the defense models")
    common(sp)

    for name, text in (("attack", "run an attack per seed"), ("evaluate", "score injections against the defenses")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--method", default="tdgia", help=f"one of: {', '.join(method_keys())}")
        sp.add_argument("--budget-nodes", type=int, default=None)
        sp.add_argument("--budget-degree", type=int, default=None)
        if name == "evaluate":
            sp.add_argument("injections", nargs="*", type=Path, help="injection.json files or their directories")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    tree = load_config(args.config)
    if args.seed is not None:
        tree["seeds"] = [args.seed]
    if args.out is not None:
        tree["output_dir"] = str(args.out)
    if getattr(args, "nodes", None) is not None:
        tree["dataset"]["sbm"]["nodes"] = args.nodes
    if getattr(args, "blocks", None) is not None:
        tree["dataset"]["sbm"]["blocks"] = args.blocks
    # the config budget is a cap; CLI flags may only tighten it
    for flag, key in (("budget_nodes", "nodes"), ("budget_degree", "degree")):
        value = getattr(args, flag, None)
        if value is None:
            continue
        cap = tree["budget"][key]
        if value < 0 or (cap is not None and value > cap):
            raise ConfigError(f"--{flag.replace('_', '-')} {value} exceeds the configured budget {key}={cap}")
        tree["budget"][key] = value
    return tree


# ---- shared loading ----

def load_experiment_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset_path is not None:
        return load_dataset(cfg.dataset_path, strict_symmetric=cfg.strict_symmetric)
    local = dataset_dir(cfg.output_dir)
    if not local.exists():
        raise ConfigError(f"no dataset: set dataset.path or run `synth` into {cfg.output_dir}")
    return load_dataset(local, strict_symmetric=cfg.strict_symmetric)


def _load_models(cfg: ExperimentConfig, entries: Sequence[NamedModel]) -> list[tuple[str, Model]]:
    return [(m.name, load_model(model_path(cfg.output_dir, m.name))) for m in entries]


def _echo(tree: dict, directory: Path) -> None:
    save_config(tree, directory / CONFIG_ECHO)


# ---- commands ----

def cmd_synth(cfg: ExperimentConfig, tree: dict) -> Path:
    seed = cfg.seeds[0]
    dataset = synth_sbm(cfg.sbm, seed)
    out = save_dataset(dataset, dataset_dir(cfg.output_dir))
    _echo(tree, out)
    record_run(ledger_path(cfg.output_dir), "synth", out, seed=seed)
    s = summary(dataset)
    print(
        f"[{APP_NAME}] dataset {out}: nodes={s['nodes']} edges={s['edges']} features={s['features']} "
        f"classes={s['classes']} train/val/test={s['train']}/{s['val']}/{s['test']} range={s['feature_range']}"
    )
    return out


def cmd_train(cfg: ExperimentConfig, tree: dict) -> Path:
    dataset = load_experiment_dataset(cfg)
    base = cfg.seeds[0]
    jobs: list[tuple[str, NamedModel, int]] = [("surrogate", cfg.surrogate, base)]
    jobs += [("defense", m, base + DEFENSE_SEED_STRIDE * (i + 1)) for i, m in enumerate(cfg.defenses)]
    jobs += [("transfer", m, base + TRANSFER_SEED_OFFSET + i) for i, m in enumerate(cfg.transfer_surrogates)]
    names = [m.name for _, m, _ in jobs]
    if len(set(names)) != len(names):
        raise ConfigError(f"model names must be unique across surrogate, defenses and transfer_surrogates: {names}")

    out = models_dir(cfg.output_dir)
    run_id = record_run(ledger_path(cfg.output_dir), "train", out, seed=base)
    rows = []
    for role, entry, seed in jobs:
        model = train(entry.spec, dataset, replace(entry.train, seed=seed), progress=cfg.progress)
        save_model(model_path(cfg.output_dir, entry.name), model)
        labels = predict_labels(model, dataset).labels
        val_acc = accuracy(labels, dataset.labels, dataset.val)
        test_acc = accuracy(labels, dataset.labels, dataset.test)
        rows.append([entry.name, role, entry.spec.architecture, seed, val_acc, test_acc])
        print(f"[{APP_NAME}] {role} {entry.name} ({entry.spec.architecture}, seed {seed}): val={val_acc:.4f} test={test_acc:.4f}")
    write_csv(out / CLEAN_ACCURACY_FILE, ["model", "role", "architecture", "seed", "val_accuracy", "test_accuracy"], rows)
    record_metrics(ledger_path(cfg.output_dir), run_id, [(r[0], r[5], None) for r in rows])
    _echo(tree, out)
    return out


def _method(method: str) -> AttackMethod:
    try:
        return method_by_key(method)
    except KeyError:
        raise ConfigError(f"unknown method {method!r}; valid methods: {', '.join(method_keys())}") from None


def cmd_attack(cfg: ExperimentConfig, tree: dict, method: str) -> list[Path]:
    attack = _method(method)
    dataset = load_experiment_dataset(cfg)
    surrogate = load_model(model_path(cfg.output_dir, cfg.surrogate.name))

    def one(seed: int) -> AttackResult:
        return attack.run(surrogate, dataset, cfg.budget, replace(cfg.attack, seed=seed), progress=cfg.progress)

    seeds = list(cfg.seeds)
    if cfg.workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    written = []
    for seed, result in zip(seeds, results):
        d = attack_dir(cfg.output_dir, method, seed)
        save_injection(d / INJECTION_FILE, result.injection, cfg.budget)
        write_attack_log(d / ATTACK_LOG_FILE, result.log)
        _echo(tree, d)
        record_run(ledger_path(cfg.output_dir), "attack", d, method=method, seed=seed)
        print(f"[{APP_NAME}] {method} seed {seed}: {result.injection.n_injected} nodes, "
              f"{len(result.injection.cross_edges)} edges -> {d}")
        written.append(d)
    return written


def _discover_injections(cfg: ExperimentConfig) -> list[Path]:
    root = cfg.output_dir / ATTACKS_DIR
    if not root.exists():
        return []
    return sorted(root.glob(f"*/seed_*/{INJECTION_FILE}"))


def cmd_evaluate(
    cfg: ExperimentConfig,
    tree: dict,
    injections: Sequence[Path],
    method: str,
) -> Path:
    if len(cfg.weights) != len(cfg.defenses):
        raise ConfigError(f"metric_weights has {len(cfg.weights)} entries for {len(cfg.defenses)} defenses")
    dataset = load_experiment_dataset(cfg)
    defenses = _load_models(cfg, cfg.defenses)

    clean = evaluate_attack(defenses, dataset, Injection.empty(dataset.dim), cfg.weights,
                            top3_mode=cfg.top3_mode, workers=cfg.workers)
    reports: list[EvalReport] = [clean]
    paths = [p / INJECTION_FILE if p.is_dir() else p for p in injections] or _discover_injections(cfg)
    for path in paths:
        injection, _ = load_injection(path)
        violations = validate_injection(injection, cfg.budget, dataset.n)
        if violations:
            raise BudgetError(violations)
        found_method, seed = parse_attack_dir(path.parent)
        reports.append(
            evaluate_attack(
                defenses,
                dataset,
                injection,
                cfg.weights,
                top3_mode=cfg.top3_mode,
                method=found_method or path.parent.name,
                seed=seed,
                budget=cfg.budget,
                clean_accuracy=clean.clean_accuracy,
                workers=cfg.workers,
            )
        )

    matrix = None
    curve = None
    if cfg.transfer_surrogates or cfg.sweep_budgets:
        surrogate = load_model(model_path(cfg.output_dir, cfg.surrogate.name))
        if cfg.transfer_surrogates:
            rows = [(cfg.surrogate.name, surrogate), *_load_models(cfg, cfg.transfer_surrogates)]
            matrix = transfer_matrix(rows, defenses, _method(method).run, dataset, cfg.budget,
                                     replace(cfg.attack, seed=cfg.seeds[0]),
                                     workers=cfg.workers, progress=cfg.progress)
        if cfg.sweep_budgets:
            curve = []
            for key in cfg.sweep_methods or (method,):
                runner = _method(key).run
                for seed in cfg.seeds:
                    curve += budget_sweep(
                        surrogate,
                        defenses,
                        runner,
                        dataset,
                        cfg.budget,
                        replace(cfg.attack, seed=seed),
                        cfg.weights,
                        cfg.sweep_budgets,
                        method=key,
                        top3_mode=cfg.top3_mode,
                        workers=cfg.workers,
                        progress=cfg.progress,
                    )

    out = eval_dir(cfg.output_dir)
    emit_report(out, reports, matrix=matrix, curve=curve)
    _echo(tree, out)
    ledger = ledger_path(cfg.output_dir)
    for r in reports:
        run_id = record_run(ledger, "evaluate", out, method=r.method, seed=r.seed)
        record_metrics(ledger, run_id, r.per_model())

    print(f"[{APP_NAME}] {'method':<20} {'seed':>5} {'s_avg':>8} {'s_top3':>8} {'s_weighted':>10} {'reduction':>9}")
    for r in reports:
        seed = "-" if r.seed is None else str(r.seed)
        print(f"[{APP_NAME}] {r.method:<20} {seed:>5} {r.attacked.s_avg:>8.4f} {r.attacked.s_top3:>8.4f} "
              f"{r.attacked.s_weighted:>10.4f} {r.reduction:>9.4f}")
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        tree = resolve_config(args)
        cfg = ExperimentConfig.from_dict(tree)
        if args.command == "synth":
            cmd_synth(cfg, tree)
        elif args.command == "train":
            cmd_train(cfg, tree)
        elif args.command == "attack":
            cmd_attack(cfg, tree, args.method)
        else:
            cmd_evaluate(cfg, tree, args.injections, args.method)
    except GIALabError as e:
        log.error("%s", e)
        return e.exit_code
    return EXIT_OK


def run() -> None:
    raise SystemExit(main(sys.argv[1:]))
