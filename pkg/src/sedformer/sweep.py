"""Hyperparameter sweep harness over the standard search grids.

One axis varies at a time while the rest stay at the base configuration;
each cell trains from scratch on the given splits and reports pooled test
metrics, emitting one CSV row per (axis, value) cell.
"""

from __future__ import annotations

import csv
from dataclasses import replace

from .errors import ConfigError
from .model import ModelConfig, SedFormer
from .training import TrainConfig, evaluate, train

GRIDS = {
    "tau": [1.0, 2.0, 3.0, 4.0],
    "stride": [2, 4, 8, 16],
    "blocks": [1, 2, 3, 4],
    "dim": [16, 32, 64, 128],
}

_AXIS_FIELD = {"tau": "tau_init", "stride": "pool_stride",
               "blocks": "blocks", "dim": "dim"}


def run_cell(splits: dict, base: ModelConfig, train_cfg: TrainConfig,
             axis: str, value) -> dict:
    """Train and evaluate one grid cell; returns a CSV-ready row."""
    if axis not in _AXIS_FIELD:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(_AXIS_FIELD)}")
    cfg = replace(base, **{_AXIS_FIELD[axis]: value})
    model = SedFormer(cfg)
    train(model, splits["train"], splits["val"], train_cfg)
    m = evaluate(model, splits["test"])
    return {"axis": axis, "value": value, "mse": m["mse"], "mae": m["mae"],
            "n_queries": m["n_queries"]}


def run_sweep(splits: dict, base: ModelConfig, train_cfg: TrainConfig,
              axes: list[str] | None = None, out_csv: str | None = None,
              log=None) -> list[dict]:
    """Sweep every value of every requested axis; optionally write the CSV."""
    rows = []
    for axis in (axes or list(GRIDS)):
        if axis not in GRIDS:
            raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(GRIDS)}")
        for value in GRIDS[axis]:
            row = run_cell(splits, base, train_cfg, axis, value)
            rows.append(row)
            if log is not None:
                log(f"sweep {axis}={value}: mse={row['mse']:.6f} mae={row['mae']:.6f}")
    if out_csv is not None:
        write_sweep_csv(out_csv, rows)
    return rows


def write_sweep_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["axis", "value", "mse", "mae", "n_queries"])
        for r in rows:
            w.writerow([r["axis"], r["value"], repr(float(r["mse"])),
                        repr(float(r["mae"])), int(r["n_queries"])])


def read_sweep_csv(path: str) -> list[dict]:
    rows = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != ["axis", "value", "mse", "mae", "n_queries"]:
            raise ConfigError(f"{path}: unexpected header {header}")
        for row in r:
            rows.append({"axis": row[0], "value": float(row[1]), "mse": float(row[2]),
                         "mae": float(row[3]), "n_queries": int(row[4])})
    return rows
