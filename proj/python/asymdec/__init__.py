"""Binary decisions under covariate-driven asymmetric losses.

Configuration arguments (loss specs, training and simulation configs, cost
tables) accept either a dict or a JSON string. Models are returned as dicts
in the same schema the command-line tool writes to model.json.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

import numpy as np

from . import _asymdec
from ._asymdec import (
    AsymdecError,
    __version__,
    calibration_constants,
    calibration_gap,
    inf_q,
    net_losses,
    phi,
)

__all__ = [
    "AsymdecError",
    "__version__",
    "calibration_constants",
    "calibration_gap",
    "evaluate",
    "fit",
    "inf_q",
    "net_losses",
    "phi",
    "predict",
    "pretrial_cells",
    "simulate",
]


def _text(value: Mapping[str, Any] | str | None) -> str:
    if value is None:
        return ""
    return value if isinstance(value, str) else json.dumps(value)


def _matrix(X: Any) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(X, dtype=np.float64).reshape(len(X), -1))


def fit(
    X: Any,
    y: Sequence[int],
    loss: Mapping[str, Any] | str,
    family: str = "logit",
    convexifier: str = "logistic",
    group: Sequence[int] | None = None,
    config: Mapping[str, Any] | str | None = None,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
    numeric_columns: Mapping[str, Sequence[float]] | None = None,
    text_columns: Mapping[str, Sequence[str]] | None = None,
) -> dict:
    """Weighted fit of one model family; labels may be 0/1 or -1/+1."""
    model = _asymdec.fit(
        _matrix(X),
        [int(v) for v in y],
        _text(loss),
        family=family,
        convexifier=convexifier,
        group=[] if group is None else [int(g) for g in group],
        config=_text(config),
        seed=seed,
        feature_names=list(feature_names) if feature_names is not None else None,
        numeric_columns={k: list(map(float, v)) for k, v in (numeric_columns or {}).items()},
        text_columns={k: list(v) for k, v in (text_columns or {}).items()},
    )
    return json.loads(model)


def predict(model: Mapping[str, Any] | str, X: Any, c: Sequence[float] | None = None) -> np.ndarray:
    """Soft scores; their sign is the decision. Networks use the thresholds c."""
    thresholds = None if c is None else np.asarray(c, dtype=np.float64)
    return _asymdec.predict(_text(model), _matrix(X), thresholds)


def evaluate(
    model: Mapping[str, Any] | str,
    X: Any,
    y: Sequence[int],
    loss: Mapping[str, Any] | str,
    group: Sequence[int] | None = None,
    numeric_columns: Mapping[str, Sequence[float]] | None = None,
    text_columns: Mapping[str, Sequence[str]] | None = None,
) -> dict:
    """Realized cost per confusion cell, error rates, AUC and group rates."""
    report = _asymdec.evaluate(
        _text(model),
        _matrix(X),
        [int(v) for v in y],
        _text(loss),
        group=[] if group is None else [int(g) for g in group],
        numeric_columns={k: list(map(float, v)) for k, v in (numeric_columns or {}).items()},
        text_columns={k: list(v) for k, v in (text_columns or {}).items()},
    )
    return json.loads(report)


def simulate(config: Mapping[str, Any] | str | None = None, experiment: str = "baseline", jobs: int = 1) -> Any:
    """Summary of a Monte Carlo experiment: baseline, plugin or mistakes."""
    return json.loads(_asymdec.simulate(_text(config), experiment, jobs))


def pretrial_cells(
    group: int, crime: str, detention_days: float, tables: Mapping[str, Any] | str | None = None
) -> tuple[float, float, float, float]:
    """Loss cells (pp, np, pn, nn) of one pretrial record."""
    return _asymdec.pretrial_cells(group, crime, detention_days, _text(tables))
