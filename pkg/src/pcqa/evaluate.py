"""Correlation analysis between objective scores and subjective ratings.

The harness fits a monotonic regression from raw metric output to the
rating scale, then reports the usual agreement statistics: Pearson
correlation on the mapped scores, Spearman rank correlation on the raw
scores, and RMSE on the mapped scores.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, stats

from .errors import DomainError

__all__ = [
    "LogisticFit",
    "GroupReport",
    "EvalReport",
    "logistic_fit",
    "plcc",
    "srocc",
    "rmse",
    "evaluate_scores",
    "evaluate_records",
]

#: Groups smaller than this are dropped outright: a regression through one
#: or two points is meaningless.
MIN_GROUP_SIZE = 3

#: Groups at least MIN_GROUP_SIZE but smaller than this are reported with a
#: low-sample flag so downstream consumers can discount them.
SMALL_GROUP_SIZE = 5


def _logistic(x: np.ndarray, b1: float, b2: float, b3: float, b4: float, b5: float) -> np.ndarray:
    """Five-parameter monotone map: scaled logistic plus a linear ramp."""
    z = np.clip(b2 * (x - b3), -500.0, 500.0)
    return b1 * (0.5 - 1.0 / (1.0 + np.exp(z))) + b4 * x + b5


@dataclass(frozen=True)
class LogisticFit:
    """Fitted regression from raw scores to the rating scale."""

    params: tuple[float, float, float, float, float]
    fallback: bool = False
    degenerate: bool = False

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return _logistic(x, *self.params)


def _linear_fallback(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, float]:
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return (0.0, 1.0, 0.0, float(slope), float(intercept))


def logistic_fit(predictions: Sequence[float], ratings: Sequence[float]) -> LogisticFit:
    """Fit the five-parameter map, falling back to least squares.

    The nonlinear fit starts from a sign-aware guess: amplitude covering
    the rating range, slope scaled by the score spread, knee at the median
    score. When the optimizer fails to converge or converges worse than a
    straight line, the straight line wins.
    """
    x = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(ratings, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("predictions and ratings must be 1-d and the same length")
    if x.size < MIN_GROUP_SIZE:
        raise DomainError(f"need at least {MIN_GROUP_SIZE} pairs to fit, got {x.size}")

    if np.ptp(x) == 0.0:
        # Constant predictor: nothing to regress on.
        return LogisticFit((0.0, 1.0, 0.0, 0.0, float(np.mean(y))), fallback=True, degenerate=True)

    direction = 1.0 if np.corrcoef(x, y)[0, 1] >= 0 else -1.0
    spread = float(np.std(x))
    initial = (
        direction * float(np.ptp(y)),
        1.0 / spread if spread > 0 else 1.0,
        float(np.median(x)),
        0.0,
        float(np.mean(y)),
    )

    linear = _linear_fallback(x, y)
    linear_sse = float(np.sum((_logistic(x, *linear) - y) ** 2))

    if x.size < 5:
        # Fewer points than parameters: only the straight line is
        # identifiable.
        return LogisticFit(linear, fallback=True)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", optimize.OptimizeWarning)
            params, _ = optimize.curve_fit(_logistic, x, y, p0=initial, maxfev=20000)
        params = tuple(float(p) for p in params)
        sse = float(np.sum((_logistic(x, *params) - y) ** 2))
    except (RuntimeError, optimize.OptimizeWarning):
        params, sse = None, math.inf

    if params is None or not math.isfinite(sse) or sse > linear_sse:
        return LogisticFit(linear, fallback=True)
    return LogisticFit(params)


def plcc(mapped: Sequence[float], ratings: Sequence[float]) -> float:
    """Pearson linear correlation; 0.0 when either side is constant."""
    a = np.asarray(mapped, dtype=np.float64)
    b = np.asarray(ratings, dtype=np.float64)
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return 0.0
    return float(stats.pearsonr(a, b)[0])


def srocc(predictions: Sequence[float], ratings: Sequence[float]) -> float:
    """Spearman rank correlation on the raw scores; 0.0 when degenerate."""
    a = np.asarray(predictions, dtype=np.float64)
    b = np.asarray(ratings, dtype=np.float64)
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return 0.0
    return float(stats.spearmanr(a, b).statistic)


def rmse(mapped: Sequence[float], ratings: Sequence[float]) -> float:
    a = np.asarray(mapped, dtype=np.float64)
    b = np.asarray(ratings, dtype=np.float64)
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class GroupReport:
    """Agreement statistics for one content group."""

    name: str
    size: int
    plcc: float
    srocc: float
    rmse: float
    low_sample: bool = False
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "size": self.size,
            "plcc": self.plcc,
            "srocc": self.srocc,
            "rmse": self.rmse,
            "low_sample": self.low_sample,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class EvalReport:
    """Overall agreement statistics plus optional per-group breakdown."""

    size: int
    plcc: float
    srocc: float
    rmse: float
    fit_params: tuple[float, float, float, float, float]
    fit_fallback: bool
    degenerate: bool
    fit_scope: str = "global"
    groups: tuple[GroupReport, ...] = field(default_factory=tuple)
    excluded_groups: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "plcc": self.plcc,
            "srocc": self.srocc,
            "rmse": self.rmse,
            "fit": {
                "params": list(self.fit_params),
                "fallback": self.fit_fallback,
                "scope": self.fit_scope,
            },
            "degenerate": self.degenerate,
            "groups": [g.to_dict() for g in self.groups],
            "excluded_groups": list(self.excluded_groups),
        }


def evaluate_scores(predictions: Sequence[float], ratings: Sequence[float]) -> EvalReport:
    """Fit the regression and report PLCC / SROCC / RMSE for one pool."""
    x = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(ratings, dtype=np.float64)
    fit = logistic_fit(x, y)
    mapped = fit(x)
    return EvalReport(
        size=int(x.size),
        plcc=plcc(mapped, y),
        srocc=srocc(x, y),
        rmse=rmse(mapped, y),
        fit_params=fit.params,
        fit_fallback=fit.fallback,
        degenerate=fit.degenerate,
    )


def _group_stats(
    name: str,
    x: np.ndarray,
    y: np.ndarray,
    fit: LogisticFit,
) -> GroupReport:
    mapped = fit(x)
    return GroupReport(
        name=name,
        size=int(x.size),
        plcc=plcc(mapped, y),
        srocc=srocc(x, y),
        rmse=rmse(mapped, y),
        low_sample=x.size < SMALL_GROUP_SIZE,
        degenerate=fit.degenerate or np.ptp(x) == 0.0,
    )


def evaluate_records(
    records: Sequence[Mapping[str, object]],
    *,
    fit_scope: str = "global",
) -> EvalReport:
    """Evaluate scored records with optional per-content grouping.

    Each record needs ``score`` and ``mos`` keys; an optional ``group``
    key assigns the record to a content group. With ``fit_scope="global"``
    one regression is shared by every group; with ``"per-group"`` each
    group is refit independently before its statistics are taken.
    """
    if fit_scope not in ("global", "per-group"):
        raise DomainError(f"unknown fit scope: {fit_scope!r}")
    if not records:
        raise DomainError("no records to evaluate")

    x_all, y_all, labels = [], [], []
    for i, rec in enumerate(records):
        try:
            x_all.append(float(rec["score"]))  # type: ignore[arg-type]
            y_all.append(float(rec["mos"]))  # type: ignore[arg-type]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"record {i}: missing or non-numeric score/mos") from exc
        labels.append(str(rec.get("group", "")))
    x_arr = np.asarray(x_all)
    y_arr = np.asarray(y_all)

    overall = evaluate_scores(x_arr, y_arr)
    global_fit = LogisticFit(overall.fit_params, overall.fit_fallback, overall.degenerate)

    groups: list[GroupReport] = []
    excluded: list[str] = []
    seen: list[str] = []
    for name in labels:
        if name and name not in seen:
            seen.append(name)
    for name in seen:
        mask = np.array([lbl == name for lbl in labels])
        gx, gy = x_arr[mask], y_arr[mask]
        if gx.size < MIN_GROUP_SIZE:
            excluded.append(name)
            continue
        fit = logistic_fit(gx, gy) if fit_scope == "per-group" else global_fit
        groups.append(_group_stats(name, gx, gy, fit))

    return EvalReport(
        size=overall.size,
        plcc=overall.plcc,
        srocc=overall.srocc,
        rmse=overall.rmse,
        fit_params=overall.fit_params,
        fit_fallback=overall.fit_fallback,
        degenerate=overall.degenerate,
        fit_scope=fit_scope,
        groups=tuple(groups),
        excluded_groups=tuple(excluded),
    )
