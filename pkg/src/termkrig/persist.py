"""Versioned JSON persistence for calibrated models.

The document embeds the source quotes (as CSV text) so downstream
commands can rebuild the constraint system without the original file.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass

import numpy as np

from .calibrate import FitReport
from .curve import CurveModel, KernelParams, TimeGrid
from .errors import ConfigError
from .market import MarketSnapshot, parse_snapshot_text, snapshot_to_csv

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "LoadedModel", "save_model", "load_model", "model_document"]


@dataclass(frozen=True)
class LoadedModel:
    snapshot: MarketSnapshot
    grid: TimeGrid
    params: KernelParams
    gamma: float
    seasonality: bool
    model: CurveModel
    model_plain: CurveModel


def model_document(
    snapshot: MarketSnapshot,
    params: KernelParams,
    gamma: float,
    model: CurveModel,
    model_plain: CurveModel,
    mle_report: FitReport,
    map_report: FitReport,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "asof": snapshot.asof.isoformat(),
        "quotes_csv": snapshot_to_csv(snapshot),
        "params": {"sigma": params.sigma, "theta": params.theta},
        "gamma": gamma,
        "seasonality": bool(model.seasonality_enabled),
        "xi": [float(v) for v in model.xi],
        "xi_plain": [float(v) for v in model_plain.xi],
        "fit": {
            "nll": mle_report.nll,
            "mle_evaluations": mle_report.iterations,
            "mle_converged": mle_report.converged,
            "objective": map_report.objective,
            "max_violation": map_report.max_violation,
            "kkt_residual": map_report.kkt_residual,
        },
    }


def save_model(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path: str) -> LoadedModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file {path!r} is not valid JSON: {exc}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"model file {path!r} has schema version {version!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    asof = dt.date.fromisoformat(doc["asof"])
    snapshot = parse_snapshot_text(doc["quotes_csv"], asof)
    grid = TimeGrid.for_snapshot(snapshot)
    params = KernelParams(doc["params"]["sigma"], doc["params"]["theta"])
    gamma = float(doc["gamma"])
    xi = np.asarray(doc["xi"], dtype=np.float64)
    xi_plain = np.asarray(doc["xi_plain"], dtype=np.float64)
    if xi.size != grid.n or xi_plain.size != grid.n:
        raise ConfigError(f"model file {path!r}: coefficient length mismatch")
    model = CurveModel(
        grid=grid,
        params=params,
        xi=xi,
        gamma=gamma,
        seasonality_enabled=bool(doc["seasonality"]),
    )
    model_plain = CurveModel(grid=grid, params=params, xi=xi_plain, gamma=0.0)
    return LoadedModel(
        snapshot=snapshot,
        grid=grid,
        params=params,
        gamma=gamma,
        seasonality=bool(doc["seasonality"]),
        model=model,
        model_plain=model_plain,
    )
