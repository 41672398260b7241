"""Gaussian edge weights and neighborhood-level graph operators.

A local graph is a star: one center joined to the points of a weighted
neighborhood. Edge weight falls off as exp(-d^2 / variance) and is zero
beyond a hard distance cutoff; the cutoff compares the plain (unsquared)
Euclidean distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class GraphParams:
    """Edge-weight parameters: hard distance cutoff and Gaussian variance."""

    cutoff: float
    variance: float

    def __post_init__(self):
        if not self.cutoff >= 0:
            raise DomainError(f"cutoff must be >= 0, got {self.cutoff}")
        if not self.variance > 0:
            raise DomainError(f"variance must be > 0, got {self.variance}")

    @classmethod
    def from_cutoff(cls, cutoff: float) -> "GraphParams":
        """Default coupling: variance = cutoff^2 / 2 (floored to stay positive)."""
        return cls(cutoff=float(cutoff), variance=max(cutoff * cutoff / 2.0, _TINY))


def edge_weight(distance, params: GraphParams):
    """exp(-d^2 / variance) for d <= cutoff, else 0. Array-aware."""
    d = np.asarray(distance, dtype=np.float64)
    w = np.where(d <= params.cutoff, np.exp(-(d * d) / params.variance), 0.0)
    return float(w) if np.isscalar(distance) or w.ndim == 0 else w


def mixed_edge_weight(geom_distance, color_distance, geom_variance: float,
                      color_variance: float, cutoff: float):
    """Average of a geometry and a color Gaussian kernel, gated on geometry.

    (exp(-dg^2/geom_variance) + exp(-dc^2/color_variance)) / 2 when the
    geometric distance is within the cutoff, else 0. Inputs are expected in
    normalized units ([0, 1] coordinate and color scales).
    """
    if geom_variance <= 0 or color_variance <= 0:
        raise DomainError("mixed edge weight requires positive variances")
    dg = np.asarray(geom_distance, dtype=np.float64)
    dc = np.asarray(color_distance, dtype=np.float64)
    w = 0.5 * (np.exp(-(dg * dg) / geom_variance) + np.exp(-(dc * dc) / color_variance))
    w = np.where(dg <= cutoff, w, 0.0)
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True, eq=False)
class WeightedNeighborhood:
    """Neighbors of one center point, with precomputed distances and weights.

    center_index is the center's index in the indexed cloud, or -1 when the
    center is not a member of that cloud (e.g. a keypoint measured against a
    different cloud). The center itself is never listed as a neighbor.
    """

    center_index: int
    indices: np.ndarray    # (M,) neighbor indices into the owning cloud
    positions: np.ndarray  # (M, 3) neighbor coordinates
    distances: np.ndarray  # (M,) center-to-neighbor distances
    weights: np.ndarray    # (M,) edge weights, all > 0

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True, eq=False)
class SignalAttribute:
    """Per-point signal with 1 to 3 channels (color, coordinates, normals)."""

    values: np.ndarray
    kind: str = "color"
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or not 1 <= values.shape[1] <= 3:
            raise ValidationError(
                f"signal must have 1-3 channels, got shape {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValidationError("signal values must be finite")
        object.__setattr__(self, "values", values)
        if self.labels is None:
            object.__setattr__(
                self, "labels", tuple(f"c{i}" for i in range(values.shape[1]))
            )
        elif len(self.labels) != values.shape[1]:
            raise ValidationError("one label per channel required")

    @property
    def channel_count(self) -> int:
        return int(self.values.shape[1])


def _signal_values(signal) -> np.ndarray:
    return signal.values if isinstance(signal, SignalAttribute) else np.asarray(signal)


def degree(neighborhood: WeightedNeighborhood) -> float:
    """Sum of incident edge weights; 0 for an isolated center."""
    return float(neighborhood.weights.sum())


def graph_gradient(neighborhood: WeightedNeighborhood, signal,
                   center_value=None) -> np.ndarray:
    """Per-channel color-gradient sum: sum_j sqrt(w_j) * (f_j - f_center).

    With a constant signal the gradient is exactly zero. `center_value`
    overrides the center signal lookup; required when the center is not a
    member of the signal's cloud.
    """
    values = _signal_values(signal)
    if center_value is None:
        if neighborhood.center_index < 0:
            raise DomainError("center is not in this cloud; pass center_value")
        center_value = values[neighborhood.center_index]
    if neighborhood.size == 0:
        return np.zeros(values.shape[1], dtype=np.float64)
    diffs = values[neighborhood.indices] - np.asarray(center_value, dtype=np.float64)
    return (np.sqrt(neighborhood.weights)[:, None] * diffs).sum(axis=0)


def laplacian_apply(neighborhood: WeightedNeighborhood, signal,
                    center_value=None) -> np.ndarray:
    """Combinatorial Laplacian row at the center: sum_j w_j * (f_center - f_j)."""
    values = _signal_values(signal)
    if center_value is None:
        if neighborhood.center_index < 0:
            raise DomainError("center is not in this cloud; pass center_value")
        center_value = values[neighborhood.center_index]
    if neighborhood.size == 0:
        return np.zeros(values.shape[1], dtype=np.float64)
    diffs = np.asarray(center_value, dtype=np.float64) - values[neighborhood.indices]
    return (neighborhood.weights[:, None] * diffs).sum(axis=0)
