"""Experiment drivers behind the ``vqm`` subcommands.

Each ``run_*`` function takes an :class:`~vqm.config.ExperimentConfig` and
returns a :class:`Table`: metadata, a header and ordered rows. Grid points run
in a process pool when ``threads > 1``; every task derives its RNG stream from
``(seed, index)`` and results are assembled in grid order, so the worker count
never changes the output.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .ansatz import build_ansatz
from .channel import NoiseModel
from .config import ExperimentConfig
from .entanglement import ce_ame, ce_ghz, ce_of_trained_probe, concentratable_entanglement, swap_test_ce
from .errors import ConfigError, NumericalFailure
from .matkernel import basis_state, ghz_state
from .train import (
    OPTIMAL_LAYERS,
    TrainConfig,
    TrainRecord,
    barren_plateau_study,
    make_pipeline,
    run_seed,
    train,
)


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)  # side outputs, e.g. trained parameters

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise NumericalFailure(f"non-finite value {value!r} in output")
        return format(value, ".17g")
    return str(value)


def check_finite(table: Table) -> None:
    for row in table.rows:
        for v in row:
            fmt(v)


def layers_for(cfg: ExperimentConfig, kind: str) -> tuple[int, int]:
    lp, lm = OPTIMAL_LAYERS[kind]
    return (cfg.prep_layers or lp, cfg.povm_layers or lm)


def _map(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _base_meta(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config_hash": cfg.digest(),
        "tool_version": __version__,
    }


# -- training tasks (top level so they pickle) ------------------------------


@dataclass(frozen=True)
class TrainTask:
    kind: str
    n_qubits: int
    prep_layers: int
    povm_layers: int
    noise: NoiseModel
    t: float
    phi: tuple
    shift: float
    config: TrainConfig


def _run_train_task(task: TrainTask) -> dict:
    pipe = make_pipeline(task.kind, task.n_qubits, task.prep_layers, task.povm_layers, noise=task.noise,
                         t=task.t, phi=task.phi, shift=task.shift, cost_kind=task.config.cost_kind)
    rec = train(pipe, task.config)
    best = rec.best()
    best["CE"] = ce_of_trained_probe(pipe.prep, best["theta"])
    best["n_iters"] = rec.n_iters
    best["stop_reason"] = rec.stop_reason
    best["history"] = {"cost": rec.cost, "C_F": rec.C_F, "C_S": rec.C_S, "T": rec.T}
    return best


def _restart_tasks(cfg, kind, noise, t, n_qubits=None, layers=None, config=None):
    lp, lm = layers or layers_for(cfg, kind)
    base = config or cfg.train_config()
    return [
        TrainTask(kind, n_qubits or cfg.n_qubits, lp, lm, noise, t, tuple(cfg.phi), cfg.shift,
                  replace(base, seed=run_seed(cfg.seed, r)))
        for r in range(cfg.restarts)
    ]


# -- experiments --------------------------------------------------------------


def run_train(cfg: ExperimentConfig) -> Table:
    kind = cfg.ansatz
    lp, lm = layers_for(cfg, kind)
    noise = _single_noise(cfg)
    task = TrainTask(kind, cfg.n_qubits, lp, lm, noise, cfg.t, tuple(cfg.phi), cfg.shift, cfg.train_config())
    best = _run_train_task(task)
    hist = best["history"]
    table = Table(["iter", "cost", "C_F", "C_S", "T"])
    for i in range(len(hist["cost"])):
        table.rows.append([i, hist["cost"][i], hist["C_F"][i], hist["C_S"][i], hist["T"][i]])
    table.meta = _base_meta(cfg) | {
        "ansatz": kind, "n_qubits": cfg.n_qubits, "layers": f"{lp}-{lm}",
        "stop_reason": best["stop_reason"], "best_iter": best["iter"], "best_cost": best["cost"],
    }
    table.extras["params"] = {
        "ansatz": kind, "n_qubits": cfg.n_qubits, "prep_layers": lp, "povm_layers": lm,
        "theta": [float(v) for v in best["theta"]], "mu": [float(v) for v in best["mu"]],
        "cost": best["cost"], "C_F": best["C_F"], "C_S": best["C_S"], "T": best["T"],
    }
    return table


def _single_noise(cfg: ExperimentConfig) -> NoiseModel:
    n = cfg.noise
    if n.kind == "ou":
        return NoiseModel("ou", gamma=n.gamma, tau_c=n.tau_c, markovian=n.markovian)
    return NoiseModel("dephasing", lam=n.lam)


def run_sweep_dephasing(cfg: ExperimentConfig) -> Table:
    """Mean optimum over ``restarts`` seeded runs at every lambda."""
    if not cfg.lambda_grid:
        raise ConfigError("lambda_grid is empty")
    tasks = []
    for lam in cfg.lambda_grid:
        tasks += _restart_tasks(cfg, cfg.ansatz, NoiseModel("dephasing", lam=float(lam)), cfg.t)
    results = _map(_run_train_task, tasks, cfg.threads)
    table = Table(["lambda", "cost", "C_F", "C_S", "T", "CE"])
    for i, lam in enumerate(cfg.lambda_grid):
        chunk = results[i * cfg.restarts : (i + 1) * cfg.restarts]
        table.rows.append([float(lam)] + [float(np.mean([r[k] for r in chunk])) for k in ("cost", "C_F", "C_S", "T", "CE")])
    lp, lm = layers_for(cfg, cfg.ansatz)
    table.meta = _base_meta(cfg) | {
        "ansatz": cfg.ansatz, "n_qubits": cfg.n_qubits, "layers": f"{lp}-{lm}", "t": cfg.t,
        "restarts": cfg.restarts, "aggregate": "mean over restarts of each run's best-cost iterate",
    }
    return table


def _bp_task(args):
    kind, cfg = args
    return barren_plateau_study(kind, cfg.n_qubits, cfg.lambda_grid, cfg.n_runs, cfg.train_config(), t=cfg.t,
                                layers=layers_for(cfg, kind), phi=cfg.phi)


def run_barren_plateau(cfg: ExperimentConfig) -> Table:
    results = _map(_bp_task, [(k, cfg) for k in cfg.ansatzes], cfg.threads)
    table = Table(["ansatz", "lambda", "mean_abs_grad", "var_grad", "slope", "r2"])
    for kind, res in zip(cfg.ansatzes, results):
        for lam, m, v in zip(res.lambdas, res.mean_abs_grad, res.var_grad):
            table.rows.append([kind, float(lam), float(m), float(v), None, None])
        table.rows.append([kind, "fit", None, None, res.slope, res.r2])
    table.meta = _base_meta(cfg) | {
        "n_qubits": cfg.n_qubits, "n_runs": cfg.n_runs, "t": cfg.t,
        "fit": "least squares of log10(var_grad) against lambda",
    }
    return table


def run_ou_sweep(cfg: ExperimentConfig) -> Table:
    """Trained bounds against sensing time (part a) and their minima against N (part b).

    Each (mode, N, t) point keeps the restart with the lowest cost. SQL and HL
    references are anchored at the smallest N in the sweep.
    """
    n = cfg.noise
    modes = (("markovian", True), ("non-markovian", False))
    points = [(label, flag, nq, t) for label, flag in modes for nq in cfg.n_qubits_list for t in cfg.t_grid]
    tasks = []
    for label, flag, nq, t in points:
        noise = NoiseModel("ou", gamma=n.gamma, tau_c=n.tau_c, markovian=flag)
        tasks += _restart_tasks(cfg, cfg.ansatz, noise, float(t), n_qubits=nq)
    results = _map(_run_train_task, tasks, cfg.threads)
    table = Table(["part", "mode", "N", "t", "C_F", "C_S", "cost", "SQL_F", "HL_F", "SQL_S", "HL_S"])
    best_by_point = {}
    for i, (label, flag, nq, t) in enumerate(points):
        chunk = results[i * cfg.restarts : (i + 1) * cfg.restarts]
        b = min(chunk, key=lambda r: r["cost"])
        best_by_point[(label, nq, t)] = b
        table.rows.append(["a", label, nq, float(t), b["C_F"], b["C_S"], b["cost"], None, None, None, None])
    n0 = min(cfg.n_qubits_list)
    for label, _ in modes:
        minima = {}
        for nq in cfg.n_qubits_list:
            cf = min((best_by_point[(label, nq, t)]["C_F"], t) for t in cfg.t_grid)
            cs = min((best_by_point[(label, nq, t)]["C_S"], t) for t in cfg.t_grid)
            minima[nq] = (cf, cs)
        (cf0, _), (cs0, _) = minima[n0]
        for nq in cfg.n_qubits_list:
            (cf, t_cf), (cs, _) = minima[nq]
            table.rows.append([
                "b", label, nq, float(t_cf), cf, cs, None,
                cf0 * n0 / nq, cf0 * n0**2 / nq**2, cs0 * n0 / nq, cs0 * n0**2 / nq**2,
            ])
    table.meta = _base_meta(cfg) | {
        "ansatz": cfg.ansatz, "gamma": n.gamma, "tau_c": n.tau_c, "restarts": cfg.restarts,
        "reference_anchor": f"SQL = C(N0) N0/N and HL = C(N0) N0^2/N^2 with N0 = {n0}",
        "part_b_t": "sensing time minimising C_F",
    }
    return table


def run_layer_scan(cfg: ExperimentConfig) -> Table:
    grid = [(kind, lp, lm) for kind in cfg.ansatzes for lp in cfg.prep_layers_range for lm in cfg.povm_layers_range]
    tasks = []
    for kind, lp, lm in grid:
        tasks += _restart_tasks(cfg, kind, _single_noise(cfg), cfg.t, layers=(lp, lm))
    results = _map(_run_train_task, tasks, cfg.threads)
    table = Table(["ansatz", "L_prep", "L_povm", "best_cost"])
    for i, (kind, lp, lm) in enumerate(grid):
        chunk = results[i * cfg.restarts : (i + 1) * cfg.restarts]
        table.rows.append([kind, lp, lm, min(r["cost"] for r in chunk)])
    best = {}
    for row in table.rows:
        if row[0] not in best or row[3] < best[row[0]][3]:
            best[row[0]] = row
    table.meta = _base_meta(cfg) | {
        "n_qubits": cfg.n_qubits, "restarts": cfg.restarts,
        "argmin": "; ".join(f"{k} ({r[3]:.4g}, {r[1]}-{r[2]})" for k, r in best.items()),
    }
    return table


def run_cost_variant(cfg: ExperimentConfig) -> Table:
    """Train on ``C_F`` alone; per-iteration C_F plus the final C'_F, C'_S per lambda."""
    config = replace(cfg.train_config(), cost_kind="cf")
    kind = cfg.ansatz
    lp, lm = layers_for(cfg, kind)
    tasks = [TrainTask(kind, cfg.n_qubits, lp, lm, NoiseModel("dephasing", lam=float(lam)), cfg.t, tuple(cfg.phi),
                       cfg.shift, config) for lam in cfg.lambda_grid]
    results = _map(_run_train_task, tasks, cfg.threads)
    table = Table(["row", "lambda", "iter", "C_F", "C_S", "gap"])
    for lam, res in zip(cfg.lambda_grid, results):
        hist = res["history"]
        for i, (cf, cs) in enumerate(zip(hist["C_F"], hist["C_S"])):
            table.rows.append(["iter", float(lam), i, cf, cs, None])
        table.rows.append(["final", float(lam), res["iter"], res["C_F"], res["C_S"], res["C_F"] - res["C_S"]])
    table.meta = _base_meta(cfg) | {"ansatz": kind, "n_qubits": cfg.n_qubits, "layers": f"{lp}-{lm}", "cost_kind": "cf"}
    return table


def run_entanglement(cfg: ExperimentConfig) -> Table:
    table = Table(["source", "n_qubits", "xi", "xi_swap_test", "xi_ghz", "xi_ame"])
    if cfg.params_file:
        try:
            with open(cfg.params_file, encoding="utf-8") as fh:
                params = json.load(fh)
            ans = build_ansatz(params["ansatz"], params["n_qubits"], params["prep_layers"])
            theta = np.asarray(params["theta"], dtype=float)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot use params file {cfg.params_file}: {exc}") from None
        from .ansatz import prepare_vector

        psi, nq, source = prepare_vector(ans, theta), ans.n_qubits, f"{ans.kind}-probe"
    else:
        nq = cfg.n_qubits
        psi = ghz_state(nq) if cfg.state == "ghz" else basis_state(nq)
        source = cfg.state
    xi = concentratable_entanglement(psi, nq).xi
    xi_swap = swap_test_ce(psi, nq) if nq <= 4 else None
    table.rows.append([source, nq, xi, xi_swap, ce_ghz(nq), ce_ame(nq)])
    table.meta = _base_meta(cfg)
    return table


RUNNERS = {
    "train": run_train,
    "sweep-dephasing": run_sweep_dephasing,
    "barren-plateau": run_barren_plateau,
    "ou-sweep": run_ou_sweep,
    "layer-scan": run_layer_scan,
    "cost-variant": run_cost_variant,
    "entanglement": run_entanglement,
}
