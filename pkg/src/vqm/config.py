"""Experiment configuration files.

Configs are YAML mappings. Every key is optional; omitted keys take the
defaults below, and command-line flags override the file. Unknown keys and
ill-typed values raise :class:`~vqm.errors.ConfigError` carrying the line
number of the offending entry.

Top-level keys::

    experiment        train | sweep-dephasing | barren-plateau | ou-sweep |
                      layer-scan | cost-variant | entanglement
    seed              int, default 0
    out               output CSV path, default "<experiment>.csv"
    ansatz            star | ring | squeezing, default star
    ansatzes          list of ansatz kinds (barren-plateau, layer-scan)
    n_qubits          int, default 3
    n_qubits_list     list of ints (ou-sweep), default [2, 3]
    prep_layers       int, default per ansatz (star 2, ring 3, squeezing 2)
    povm_layers       int, default per ansatz (2 for all three)
    phi               three floats, default [pi/6, pi/6, pi/6]
    t                 sensing time for fixed dephasing, default 1.0
    shift             finite-difference step in phi, default 0.01
    noise:
      kind            dephasing | ou, default dephasing
      lambda          dephasing probability for single runs, default 0.0
      gamma           OU decay rate, default 0.1
      tau_c           OU memory time, default 20.0
      markovian       OU regime for single runs, default true
    lambda_grid       list, or {start, stop, step}; default 0.0..0.9 step 0.1
    t_grid            list, or {start, stop, step}; default 0.5..10 step 0.5
    restarts          seeded restarts per grid point, default 10
    n_runs            random initialisations per lambda (barren-plateau), default 50
    prep_layers_range list of ints (layer-scan), default [1, 2, 3]
    povm_layers_range list of ints (layer-scan), default [1, 2, 3]
    state             product | ghz (entanglement), default ghz
    params_file       JSON written by ``vqm train`` (entanglement)
    threads           worker processes, default 1
    plot_script       write a matplotlib companion script, default false
    train:            alpha, beta1, beta2, epsilon, max_iters, patience,
                      min_delta, grad_mode, grad_shift, cost_kind
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from .ansatz import KINDS
from .errors import ConfigError
from .fisher import COST_KINDS
from .train import TrainConfig

EXPERIMENTS = (
    "train",
    "sweep-dephasing",
    "barren-plateau",
    "ou-sweep",
    "layer-scan",
    "cost-variant",
    "entanglement",
)


def _grid(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(n)]


@dataclass(frozen=True)
class NoiseSection:
    kind: str = "dephasing"
    lam: float = 0.0
    gamma: float = 0.1
    tau_c: float = 20.0
    markovian: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "train"
    seed: int = 0
    out: str | None = None
    ansatz: str = "star"
    ansatzes: tuple[str, ...] = KINDS
    n_qubits: int = 3
    n_qubits_list: tuple[int, ...] = (2, 3)
    prep_layers: int | None = None
    povm_layers: int | None = None
    phi: tuple[float, float, float] = (np.pi / 6, np.pi / 6, np.pi / 6)
    t: float = 1.0
    shift: float = 0.01
    noise: NoiseSection = NoiseSection()
    lambda_grid: tuple[float, ...] = tuple(_grid(0.0, 0.9, 0.1))
    t_grid: tuple[float, ...] = tuple(_grid(0.5, 10.0, 0.5))
    restarts: int = 10
    n_runs: int = 50
    prep_layers_range: tuple[int, ...] = (1, 2, 3)
    povm_layers_range: tuple[int, ...] = (1, 2, 3)
    state: str = "ghz"
    params_file: str | None = None
    threads: int = 1
    plot_script: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)

    @property
    def out_path(self) -> str:
        return self.out or f"{self.experiment}.csv"

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return replace(self.train, seed=self.seed if seed is None else seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phi"] = [float(x) for x in self.phi]
        return d

    def digest(self) -> str:
        """Hash of everything that determines the data rows (not threads/out/plotting)."""
        d = self.to_dict()
        for k in ("threads", "out", "plot_script"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)} - {"noise", "train"}
_NOISE_KEYS = {"kind": "kind", "lambda": "lam", "gamma": "gamma", "tau_c": "tau_c", "markovian": "markovian"}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)} - {"seed"}


def _line(node) -> int:
    return node.start_mark.line + 1


def _scalar(node, kind):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"expected a {kind.__name__}, got a {type(node).__name__.replace('Node', '').lower()}", _line(node))
    value = yaml.safe_load(yaml.serialize(node))
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise ConfigError(f"expected a {kind.__name__}, got {value!r}", _line(node))
    return value


def _seq(node, kind):
    if isinstance(node, yaml.MappingNode):
        bounds = {k.value: v for k, v in node.value}
        missing = {"start", "stop", "step"} - set(bounds)
        if missing or set(bounds) - {"start", "stop", "step"}:
            raise ConfigError("a range needs exactly the keys start, stop, step", _line(node))
        start, stop, step = (_scalar(bounds[k], float) for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigError("a range needs step > 0 and stop >= start", _line(node))
        return tuple(kind(v) for v in _grid(start, stop, step))
    if not isinstance(node, yaml.SequenceNode):
        raise ConfigError("expected a list", _line(node))
    return tuple(_scalar(item, kind) for item in node.value)


def _mapping(node, what):
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{what} must be a mapping", _line(node))
    seen = {}
    for key_node, value_node in node.value:
        key = key_node.value
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", _line(key_node))
        seen[key] = (key_node, value_node)
    return seen


_TOP_TYPES = {
    "experiment": str, "seed": int, "out": str, "ansatz": str, "n_qubits": int, "prep_layers": int,
    "povm_layers": int, "t": float, "shift": float, "restarts": int, "n_runs": int, "state": str,
    "params_file": str, "threads": int, "plot_script": bool,
}
_TOP_SEQS = {
    "ansatzes": str, "n_qubits_list": int, "phi": float, "lambda_grid": float, "t_grid": float,
    "prep_layers_range": int, "povm_layers_range": int,
}
_TRAIN_TYPES = {
    "alpha": float, "beta1": float, "beta2": float, "epsilon": float, "max_iters": int, "patience": int,
    "min_delta": float, "grad_mode": str, "grad_shift": float, "cost_kind": str,
}


def parse_config(text: str) -> ExperimentConfig:
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line) from None
    if root is None:
        return ExperimentConfig()
    entries = _mapping(root, "the config file")
    values, lines = {}, {}
    for key, (key_node, node) in entries.items():
        lines[key] = _line(key_node)
        if key in _TOP_TYPES:
            values[key] = _scalar(node, _TOP_TYPES[key])
        elif key in _TOP_SEQS:
            values[key] = _seq(node, _TOP_SEQS[key])
        elif key == "noise":
            noise = {}
            for nkey, (nkey_node, nnode) in _mapping(node, "noise").items():
                if nkey not in _NOISE_KEYS:
                    raise ConfigError(f"unknown noise key {nkey!r}", _line(nkey_node))
                kind = {"kind": str, "markovian": bool}.get(nkey, float)
                noise[_NOISE_KEYS[nkey]] = _scalar(nnode, kind)
                lines[f"noise.{nkey}"] = _line(nkey_node)
            values["noise"] = NoiseSection(**noise)
        elif key == "train":
            train = {}
            for tkey, (tkey_node, tnode) in _mapping(node, "train").items():
                if tkey not in _TRAIN_KEYS:
                    raise ConfigError(f"unknown train key {tkey!r}", _line(tkey_node))
                train[tkey] = _scalar(tnode, _TRAIN_TYPES[tkey])
                lines[f"train.{tkey}"] = _line(tkey_node)
            try:
                values["train"] = TrainConfig(**train)
            except ValueError as exc:
                raise ConfigError(str(exc), lines["train"]) from None
        else:
            raise ConfigError(f"unknown key {key!r}", _line(key_node))
    cfg = ExperimentConfig(**values)
    validate(cfg, lines)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def validate(cfg: ExperimentConfig, lines: dict | None = None) -> None:
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(msg, lines.get(key))

    if cfg.experiment not in EXPERIMENTS:
        fail("experiment", f"unknown experiment {cfg.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
    if cfg.ansatz not in KINDS:
        fail("ansatz", f"unknown ansatz {cfg.ansatz!r}; expected one of {', '.join(KINDS)}")
    for kind in cfg.ansatzes:
        if kind not in KINDS:
            fail("ansatzes", f"unknown ansatz {kind!r}")
    if not cfg.ansatzes:
        fail("ansatzes", "ansatzes must not be empty")
    if cfg.n_qubits < 2 or (cfg.ansatz == "ring" and cfg.n_qubits < 3):
        fail("n_qubits", f"{cfg.ansatz} ansatz cannot use n_qubits = {cfg.n_qubits}")
    if not cfg.n_qubits_list or min(cfg.n_qubits_list) < 2:
        fail("n_qubits_list", "n_qubits_list needs entries >= 2")
    for key in ("prep_layers", "povm_layers"):
        if getattr(cfg, key) is not None and getattr(cfg, key) < 1:
            fail(key, f"{key} must be >= 1")
    if len(cfg.phi) != 3 or not all(np.isfinite(cfg.phi)):
        fail("phi", "phi needs exactly three finite components")
    if not (np.isfinite(cfg.t) and cfg.t >= 0):
        fail("t", "t must be finite and >= 0")
    if not (np.isfinite(cfg.shift) and cfg.shift > 0):
        fail("shift", "shift must be finite and > 0")
    if cfg.noise.kind not in ("dephasing", "ou"):
        fail("noise.kind", f"unknown noise kind {cfg.noise.kind!r}")
    if not 0.0 <= cfg.noise.lam <= 1.0:
        fail("noise.lambda", "lambda must lie in [0, 1]")
    if cfg.noise.gamma < 0 or cfg.noise.tau_c <= 0:
        fail("noise.gamma", "OU noise needs gamma >= 0 and tau_c > 0")
    if not cfg.lambda_grid:
        fail("lambda_grid", "lambda_grid is empty")
    if any(not 0.0 <= x <= 1.0 for x in cfg.lambda_grid):
        fail("lambda_grid", "lambda_grid values must lie in [0, 1]")
    if not cfg.t_grid:
        fail("t_grid", "t_grid is empty")
    if any(x <= 0 for x in cfg.t_grid):
        fail("t_grid", "t_grid values must be > 0 (the field leaves no trace at t = 0)")
    if cfg.restarts < 1:
        fail("restarts", "restarts must be >= 1")
    if cfg.n_runs < 2:
        fail("n_runs", "n_runs must be >= 2")
    if not cfg.prep_layers_range or min(cfg.prep_layers_range) < 1:
        fail("prep_layers_range", "layer ranges need entries >= 1")
    if not cfg.povm_layers_range or min(cfg.povm_layers_range) < 1:
        fail("povm_layers_range", "layer ranges need entries >= 1")
    if cfg.state not in ("product", "ghz"):
        fail("state", "state must be product or ghz")
    if cfg.threads < 1:
        fail("threads", "threads must be >= 1")
    if cfg.train.cost_kind not in COST_KINDS:
        fail("train.cost_kind", f"unknown cost_kind {cfg.train.cost_kind!r}; expected one of {', '.join(COST_KINDS)}")
