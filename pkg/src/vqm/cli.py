"""``vqm`` command line driver.

    vqm <experiment> [--config FILE] [--seed S] [--out PATH]
        [--ansatz star|ring|squeezing] [--n-qubits N] [--restarts R] [--threads T]

Exit status: 0 on success, 2 for configuration errors, 3 when a numerical
failure (NaN or infinity) would reach the output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace

from .config import EXPERIMENTS, ExperimentConfig, load_config, validate
from .errors import ConfigError, DegenerateBound, NumericalFailure
from .experiments import RUNNERS, Table, check_finite, fmt

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

PLOT_TEMPLATE = '''"""Companion plot for {csv_name}; needs pandas and matplotlib."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv({csv_name!r}, comment="#")
cols = {y_cols!r}
ax = df.plot(x={x_col!r}, y=[c for c in cols if c in df], marker="o", logy={logy})
ax.set_title({title!r})
plt.tight_layout()
plt.savefig({png_name!r}) if len(sys.argv) < 2 else plt.show()
'''

_PLOT_AXES = {
    "train": ("iter", ["cost", "C_F", "C_S"], True),
    "sweep-dephasing": ("lambda", ["cost", "C_F", "C_S", "T"], False),
    "barren-plateau": ("lambda", ["var_grad"], True),
    "ou-sweep": ("t", ["C_F", "C_S"], True),
    "layer-scan": ("L_prep", ["best_cost"], False),
    "cost-variant": ("iter", ["C_F", "C_S"], True),
    "entanglement": ("n_qubits", ["xi"], False),
}


def render_csv(table: Table) -> str:
    """Metadata lines prefixed with '#', then an RFC 4180 table."""
    check_finite(table)
    buf = io.StringIO()
    for key, value in table.meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, table: Table) -> str:
    text = render_csv(table)
    path = cfg.out_path
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    stem = os.path.splitext(path)[0]
    if "params" in table.extras:
        with open(stem + ".params.json", "w", encoding="utf-8") as fh:
            json.dump(table.extras["params"], fh, indent=2)
    if cfg.plot_script:
        x_col, y_cols, logy = _PLOT_AXES[cfg.experiment]
        with open(stem + "_plot.py", "w", encoding="utf-8") as fh:
            fh.write(PLOT_TEMPLATE.format(
                csv_name=os.path.basename(path), png_name=os.path.basename(stem) + ".png",
                x_col=x_col, y_cols=y_cols, logy=logy, title=cfg.experiment,
            ))
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqm", description="Variational quantum metrology experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="YAML experiment config")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--ansatz", choices=("star", "ring", "squeezing"))
    parser.add_argument("--n-qubits", type=int, dest="n_qubits")
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--state", choices=("product", "ghz"), help="reference state for `entanglement`")
    parser.add_argument("--params", dest="params_file", help="trained parameters JSON for `entanglement`")
    parser.add_argument("--plot-script", action="store_true", default=None, dest="plot_script",
                        help="write a matplotlib script next to the CSV")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {"experiment": args.experiment}
    for key in ("seed", "out", "ansatz", "n_qubits", "restarts", "threads", "state", "params_file", "plot_script"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.ansatz is not None:
        overrides["ansatzes"] = (args.ansatz,)
    if args.n_qubits is not None:
        overrides["n_qubits_list"] = (args.n_qubits,)
    cfg = replace(cfg, **overrides)
    validate(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        table = RUNNERS[cfg.experiment](cfg)
        text_path = write_outputs(cfg, table)
    except ConfigError as exc:
        print(f"vqm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, DegenerateBound, FloatingPointError) as exc:
        print(f"vqm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(text_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
