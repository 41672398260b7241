"""Graph-based full-reference similarity for colored point clouds.

The metric compares a reference and a distorted cloud around a common set
of keypoints sampled from the reference geometry:

1. keypoints are drawn by high-pass graph resampling (see `resample`);
2. around each keypoint, one local graph is built per cloud from the
   points within a radius of `neighborhood_fraction` times the smallest
   reference bounding-box extent;
3. per channel, three gradient statistics are compared between the two
   graphs (total gradient mass, mean, and the covariance of the matched
   gradient sequences), each folded into a bounded similarity ratio;
4. the three feature similarities are pooled per channel, channels are
   pooled with configurable weights, and graphs are averaged into the
   final quality score.

The score is 1.0 for identical clouds and decreases toward 0 with
increasing local color/geometry disagreement.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from .baselines import estimate_normals
from .cloud import PointCloud, bounding_box
from .colorspace import ColorSpaceConfig, decompose
from .errors import DomainError
from .graph import (
    GraphParams,
    SignalAttribute,
    WeightedNeighborhood,
    edge_weight,
    mixed_edge_weight,
)
from .resample import KeypointSet, ResampleConfig, resample
from .spatial import SpatialIndex

SIGNAL_KINDS = ("color", "coordinate", "normal")

FEATURE_POOLING = ("multiply", "average")
CHANNEL_POOLING = ("weighted-average", "multiply")

# Named pooling presets: (feature pooling, channel pooling).
POOLING_PRESETS = {
    "c1": ("average", "weighted-average"),
    "c2": ("multiply", "weighted-average"),
    "c3": ("average", "multiply"),
    "c4": ("multiply", "multiply"),
}


@dataclass(frozen=True)
class GraphSimConfig:
    """Metric parameters.

    neighborhood_fraction
        Local cluster radius as a fraction of the smallest reference
        bounding-box extent.
    matching_k
        Neighbor budget used to derive the edge-weight cutoff: the cutoff
        is the largest of the matching_k smallest cluster distances (the
        whole cluster when it is smaller than matching_k).
    t_mass / t_mean / t_cov
        Stabilizer constants of the three similarity ratios.
    feature_pooling, channel_pooling
        How the three per-channel similarities and then the channels are
        combined; see POOLING_PRESETS for the named combinations.
    signal_kind
        "color", "coordinate", "normal", a tuple of kinds scored jointly,
        or "mixed" (alias for color + coordinate). With several kinds the
        per-kind scores are averaged and channel pooling is forced to the
        weighted average.
    tau_scope
        "union": the cutoff rule pools both clusters' distances;
        "per-side": the rule runs per cluster and the larger cutoff wins.
    mixed_graph_weights
        Experimental: blend a color kernel into the edge weights
        (normalized coordinates and colors; requires colored clouds).
    """

    neighborhood_fraction: float = 0.1
    matching_k: int = 50
    t_mass: float = 1e-3
    t_mean: float = 1e-3
    t_cov: float = 1e-3
    color_space: ColorSpaceConfig = field(default_factory=ColorSpaceConfig)
    feature_pooling: str = "multiply"
    channel_pooling: str = "weighted-average"
    signal_kind: str | tuple[str, ...] = "color"
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    tau_scope: str = "union"
    normals_k: int = 12
    mixed_graph_weights: bool = False
    mixed_geom_variance: float | None = None
    mixed_color_variance: float | None = None

    def __post_init__(self):
        if not 0 < self.neighborhood_fraction:
            raise DomainError("neighborhood_fraction must be positive")
        if self.matching_k < 1:
            raise DomainError(f"matching_k must be >= 1, got {self.matching_k}")
        for name in ("t_mass", "t_mean", "t_cov"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.feature_pooling not in FEATURE_POOLING:
            raise DomainError(f"unknown feature pooling '{self.feature_pooling}'")
        if self.channel_pooling not in CHANNEL_POOLING:
            raise DomainError(f"unknown channel pooling '{self.channel_pooling}'")
        if self.tau_scope not in ("union", "per-side"):
            raise DomainError(f"unknown tau_scope '{self.tau_scope}'")
        for kind in self.signal_kinds:
            if kind not in SIGNAL_KINDS:
                raise DomainError(f"unknown signal kind '{kind}'")

    @property
    def signal_kinds(self) -> tuple[str, ...]:
        kind = self.signal_kind
        if isinstance(kind, str):
            return ("color", "coordinate") if kind == "mixed" else (kind,)
        return tuple(kind)

    @classmethod
    def with_pooling_preset(cls, preset: str, **kwargs) -> "GraphSimConfig":
        if preset not in POOLING_PRESETS:
            raise DomainError(f"unknown pooling preset '{preset}'")
        feature, channel = POOLING_PRESETS[preset]
        return cls(feature_pooling=feature, channel_pooling=channel, **kwargs)

    def to_dict(self) -> dict:
        return {
            "neighborhood_fraction": self.neighborhood_fraction,
            "matching_k": self.matching_k,
            "stabilizers": [self.t_mass, self.t_mean, self.t_cov],
            "color_space": {
                "space": self.color_space.space,
                "weights": list(self.color_space.resolved_weights),
            },
            "feature_pooling": self.feature_pooling,
            "channel_pooling": self.channel_pooling,
            "signal_kind": list(self.signal_kinds),
            "resample": self.resample.to_dict(),
            "tau_scope": self.tau_scope,
            "normals_k": self.normals_k,
            "mixed_graph_weights": self.mixed_graph_weights,
        }


@dataclass(frozen=True, eq=False)
class LocalGraphPair:
    """Reference and distorted local graphs sharing one keypoint center.

    cluster sizes are the raw radius-query populations (centers excluded)
    before the cutoff filter; the neighborhoods hold the retained points.
    """

    center_index: int
    center: np.ndarray
    ref: WeightedNeighborhood
    dist: WeightedNeighborhood
    params: GraphParams
    ref_cluster_size: int
    dist_cluster_size: int


@dataclass(frozen=True, eq=False)
class GradientMoments:
    """Per-channel gradient statistics of one local graph.

    mass is the gradient sum over all retained neighbors; mean and
    variance are population statistics of the matched gradient sequence;
    matched holds that sequence, one row per matched neighbor.
    """

    mass: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    matched: np.ndarray


@dataclass(frozen=True, eq=False)
class GraphScore:
    """Similarity components of one graph pair for one signal kind."""

    sim_mass: np.ndarray
    sim_mean: np.ndarray
    sim_cov: np.ndarray
    per_channel: np.ndarray
    pooled: float


@dataclass(eq=False)
class SimilarityScore:
    """Final metric output.

    quality averages the per-graph pooled similarities over all scored
    keypoints (keypoints whose distorted-side graph is empty contribute 0;
    keypoints with an empty reference cluster are skipped and only
    counted). per_channel_means average each labeled channel over the
    graphs that produced one.
    """

    quality: float
    per_graph: np.ndarray
    graph_keypoints: np.ndarray
    per_channel_means: dict[str, float]
    empty_graphs: int
    skipped_keypoints: int
    keypoints: KeypointSet

    def to_report(self, config: GraphSimConfig | None = None) -> dict:
        report = {
            "quality": float(self.quality),
            "per_graph": [float(v) for v in self.per_graph],
            "graph_keypoints": [int(v) for v in self.graph_keypoints],
            "per_channel_means": {k: float(v) for k, v in self.per_channel_means.items()},
            "empty_graphs": int(self.empty_graphs),
            "skipped_keypoints": int(self.skipped_keypoints),
            "keypoints": {
                "indices": [int(v) for v in self.keypoints.indices],
                "scores": [float(v) for v in self.keypoints.scores],
            },
        }
        if config is not None:
            report["config"] = config.to_dict()
        return report


def _cluster(index: SpatialIndex, center: np.ndarray, radius: float):
    """Radius query with points at the exact center position removed."""
    idx, d = index.radius_query(center, radius)
    keep = d > 0.0
    return idx[keep], d[keep]


def _cutoff_from_distances(ref_d: np.ndarray, dist_d: np.ndarray,
                           matching_k: int, scope: str) -> float:
    def side(d):
        if d.size == 0:
            return 0.0
        if d.size >= matching_k:
            return float(np.partition(d, matching_k - 1)[matching_k - 1])
        return float(d.max())

    if scope == "per-side":
        return max(side(ref_d), side(dist_d))
    return side(np.concatenate([ref_d, dist_d]))


def build_local_graph_pair(center_index: int, ref: PointCloud, dist: PointCloud,
                           config: GraphSimConfig | None = None, *,
                           ref_index: SpatialIndex | None = None,
                           dist_index: SpatialIndex | None = None,
                           radius: float | None = None) -> LocalGraphPair:
    """Build the local graph pair around one reference keypoint.

    Both clusters exclude points lying exactly at the keypoint position,
    so identical clouds produce identical neighbor index sets. The shared
    edge-weight cutoff comes from the matching_k rule over the cluster
    distances; the Gaussian variance is cutoff^2 / 2.
    """
    config = config or GraphSimConfig()
    ref_index = ref_index or SpatialIndex(ref)
    dist_index = dist_index or SpatialIndex(dist)
    if radius is None:
        radius = config.neighborhood_fraction * bounding_box(ref).min_extent
    center = ref.positions[center_index]

    r_idx, r_d = _cluster(ref_index, center, radius)
    d_idx, d_d = _cluster(dist_index, center, radius)
    cutoff = _cutoff_from_distances(r_d, d_d, config.matching_k, config.tau_scope)
    params = GraphParams.from_cutoff(cutoff)

    if config.mixed_graph_weights:
        if not (ref.has_colors and dist.has_colors):
            raise DomainError("mixed graph weights require colored clouds")
        scale = max(bounding_box(ref).max_extent, 1e-30)
        geom_var = config.mixed_geom_variance
        if geom_var is None:
            geom_var = max((cutoff / scale) ** 2 / 2.0, np.finfo(np.float64).tiny)
        color_var = config.mixed_color_variance
        if color_var is None:
            color_var = geom_var
        center_rgb = ref.colors[center_index] / 255.0

        def build_side(cloud, idx, d, center_idx):
            keep = d <= cutoff
            idx, d = idx[keep], d[keep]
            col_d = np.linalg.norm(cloud.colors[idx] / 255.0 - center_rgb, axis=1)
            w = mixed_edge_weight(d / scale, col_d, geom_var, color_var,
                                  cutoff / scale if scale > 0 else 0.0)
            return WeightedNeighborhood(
                center_index=center_idx, indices=idx,
                positions=cloud.positions[idx], distances=d, weights=np.asarray(w),
            )
    else:
        def build_side(cloud, idx, d, center_idx):
            keep = d <= cutoff
            idx, d = idx[keep], d[keep]
            return WeightedNeighborhood(
                center_index=center_idx, indices=idx,
                positions=cloud.positions[idx], distances=d,
                weights=edge_weight(d, params),
            )

    return LocalGraphPair(
        center_index=center_index,
        center=center,
        ref=build_side(ref, r_idx, r_d, center_index),
        dist=build_side(dist, d_idx, d_d, -1),
        params=params,
        ref_cluster_size=int(r_idx.size),
        dist_cluster_size=int(d_idx.size),
    )


def match_and_align(pair: LocalGraphPair):
    """Positionally corresponding neighbor selections of the two graphs.

    The smaller neighborhood is the baseline (the reference wins ties);
    every baseline point is matched to its nearest point in the other
    neighborhood by Euclidean distance, ties toward the earlier neighbor.
    Many-to-one matches are allowed. Returns (ref_order, dist_order) as
    index arrays into the respective neighborhood arrays, equal length
    min(|ref|, |dist|).
    """
    nr, nd = pair.ref.size, pair.dist.size
    if nr == 0 or nd == 0:
        raise DomainError("cannot match an empty neighborhood")
    if nr <= nd:
        ref_order = np.arange(nr, dtype=np.intp)
        dist_order = _nearest_rows(pair.ref.positions, pair.dist.positions)
    else:
        dist_order = np.arange(nd, dtype=np.intp)
        ref_order = _nearest_rows(pair.dist.positions, pair.ref.positions)
    return ref_order, dist_order


def _nearest_rows(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """argmin_j ||q_i - t_j|| per query row, chunked to bound memory."""
    out = np.empty(queries.shape[0], dtype=np.intp)
    step = max(1, int(4_000_000 // max(targets.shape[0], 1)))
    for start in range(0, queries.shape[0], step):
        block = queries[start:start + step]
        out[start:start + step] = cdist(block, targets).argmin(axis=1)
    return out


def gradient_moments(neighborhood: WeightedNeighborhood, signal,
                     matched_order: np.ndarray,
                     center_value=None) -> GradientMoments:
    """Gradient statistics of one local graph.

    Per channel: the per-neighbor gradient is sqrt(w_j) * (f_j - f_center);
    mass sums it over every retained neighbor, while mean and variance are
    population statistics over the matched subsequence selected by
    `matched_order`.
    """
    values = signal.values if isinstance(signal, SignalAttribute) else np.asarray(signal)
    if center_value is None:
        if neighborhood.center_index < 0:
            raise DomainError("center is not in this cloud; pass center_value")
        center_value = values[neighborhood.center_index]
    matched_order = np.asarray(matched_order, dtype=np.intp)
    if matched_order.size == 0:
        raise DomainError("moments are undefined for an empty matched set")
    diffs = values[neighborhood.indices] - np.asarray(center_value, dtype=np.float64)
    gradients = np.sqrt(neighborhood.weights)[:, None] * diffs
    matched = gradients[matched_order]
    mean = matched.mean(axis=0)
    variance = ((matched - mean) ** 2).mean(axis=0)
    return GradientMoments(
        mass=gradients.sum(axis=0), mean=mean, variance=variance, matched=matched
    )


def covariance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-channel population covariance E[(a - E a)(b - E b)] of two
    equally long matched gradient sequences (centered two-pass form)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"matched sequences differ in shape: {a.shape} vs {b.shape}")
    if a.ndim == 1:
        a = a[:, None]
        b = b[:, None]
    return ((a - a.mean(axis=0)) * (b - b.mean(axis=0))).mean(axis=0)


def score_graph(pair: LocalGraphPair, ref_signal: SignalAttribute,
                dist_signal: SignalAttribute, config: GraphSimConfig | None = None,
                *, channel_weights=None) -> GraphScore:
    """Similarity of one graph pair under one signal.

    Three bounded ratios are computed per channel (each in [-1, 1], equal
    to 1 iff the compared statistics agree):

        sim_mass = (2 m_r m_d + t) / (m_r^2 + m_d^2 + t)
        sim_mean = same form on the matched means
        sim_cov  = (cov + t) / (std_r * std_d + t)

    then pooled per `config.feature_pooling` and `config.channel_pooling`
    (the channel stage pools absolute values).
    """
    config = config or GraphSimConfig()
    ref_order, dist_order = match_and_align(pair)
    center_value = ref_signal.values[pair.center_index]
    m_ref = gradient_moments(pair.ref, ref_signal, ref_order)
    m_dist = gradient_moments(pair.dist, dist_signal, dist_order,
                              center_value=center_value)

    def ratio(x, y, t):
        return (2.0 * x * y + t) / (x * x + y * y + t)

    sim_mass = ratio(m_ref.mass, m_dist.mass, config.t_mass)
    sim_mean = ratio(m_ref.mean, m_dist.mean, config.t_mean)
    cov = covariance(m_ref.matched, m_dist.matched)
    sim_cov = (cov + config.t_cov) / (
        np.sqrt(m_ref.variance) * np.sqrt(m_dist.variance) + config.t_cov
    )

    features = np.stack([sim_mass, sim_mean, sim_cov])
    if config.feature_pooling == "multiply":
        per_channel = features.prod(axis=0)
    else:
        per_channel = features.mean(axis=0)

    if channel_weights is None:
        channel_weights = np.ones(per_channel.shape[0])
    channel_weights = np.asarray(channel_weights, dtype=np.float64)
    if config.channel_pooling == "weighted-average":
        pooled = float(
            (channel_weights * np.abs(per_channel)).sum() / channel_weights.sum()
        )
    else:
        pooled = float(np.prod(np.abs(per_channel)))
    return GraphScore(
        sim_mass=sim_mass, sim_mean=sim_mean, sim_cov=sim_cov,
        per_channel=per_channel, pooled=pooled,
    )


def _prepare_signals(ref, dist, config, ref_index, dist_index):
    """Per-kind (kind, ref signal, dist signal, channel weights) tuples."""
    out = []
    for kind in config.signal_kinds:
        if kind == "color":
            if not (ref.has_colors and dist.has_colors):
                raise DomainError("color signal requested but a cloud has no colors")
            rs = decompose(ref, config.color_space)
            ds = decompose(dist, config.color_space)
            weights = np.asarray(config.color_space.resolved_weights)
        elif kind == "coordinate":
            rs = SignalAttribute(ref.positions, kind="coordinate", labels=("x", "y", "z"))
            ds = SignalAttribute(dist.positions, kind="coordinate", labels=("x", "y", "z"))
            weights = np.ones(3)
        else:
            rn = ref.normals if ref.has_normals \
                else estimate_normals(ref, ref_index, k=config.normals_k)[0]
            dn = dist.normals if dist.has_normals \
                else estimate_normals(dist, dist_index, k=config.normals_k)[0]
            rs = SignalAttribute(rn, kind="normal", labels=("nx", "ny", "nz"))
            ds = SignalAttribute(dn, kind="normal", labels=("nx", "ny", "nz"))
            weights = np.ones(3)
        out.append((kind, rs, ds, weights))
    return out


def graphsim(ref: PointCloud, dist: PointCloud,
             config: GraphSimConfig | None = None, *,
             keypoints: KeypointSet | np.ndarray | None = None,
             jobs: int = 1) -> SimilarityScore:
    """Score a distorted cloud against its reference.

    keypoints
        Optional preselected reference keypoint indices (bypasses the
        resampling stage; useful for fixed-keypoint comparisons).
    jobs
        Worker threads for per-keypoint scoring; results are identical
        for any job count.
    """
    config = config or GraphSimConfig()
    if ref.count == 0 or dist.count == 0:
        raise DomainError("both clouds must be non-empty")
    ref_index = SpatialIndex(ref)
    dist_index = SpatialIndex(dist)
    signals = _prepare_signals(ref, dist, config, ref_index, dist_index)

    if keypoints is None:
        keypoints = resample(ref, ref_index, config.resample)
    elif not isinstance(keypoints, KeypointSet):
        keypoints = np.asarray(keypoints, dtype=np.intp)
        keypoints = KeypointSet(indices=keypoints, scores=np.ones(keypoints.size))

    radius = config.neighborhood_fraction * bounding_box(ref).min_extent
    mixed = len(config.signal_kinds) > 1
    graph_config = replace(config, channel_pooling="weighted-average") if mixed \
        else config

    def worker(center_index: int):
        pair = build_local_graph_pair(
            int(center_index), ref, dist, graph_config,
            ref_index=ref_index, dist_index=dist_index, radius=radius,
        )
        if pair.ref_cluster_size == 0:
            return "skipped", None, None
        if pair.dist_cluster_size == 0 or pair.ref.size == 0 or pair.dist.size == 0:
            return "empty", 0.0, None
        kind_scores = []
        channels = {}
        for kind, rs, ds, weights in signals:
            gs = score_graph(pair, rs, ds, graph_config, channel_weights=weights)
            kind_scores.append(gs.pooled)
            for label, value in zip(rs.labels, gs.per_channel):
                channels[f"{kind}:{label}"] = value
        pooled = float(np.mean(kind_scores)) if mixed else kind_scores[0]
        return "scored", pooled, channels

    indices = [int(i) for i in keypoints.indices]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, indices))
    else:
        results = [worker(i) for i in indices]

    per_graph = []
    graph_keypoints = []
    channel_sums: dict[str, float] = {}
    channel_counts: dict[str, int] = {}
    empty = skipped = 0
    for center_index, (status, pooled, channels) in zip(indices, results):
        if status == "skipped":
            skipped += 1
            continue
        if status == "empty":
            empty += 1
        else:
            for label, value in channels.items():
                channel_sums[label] = channel_sums.get(label, 0.0) + float(value)
                channel_counts[label] = channel_counts.get(label, 0) + 1
        per_graph.append(pooled)
        graph_keypoints.append(center_index)

    if not per_graph:
        raise DomainError(
            "no scorable keypoint graphs (every reference cluster was empty)"
        )
    means = {k: channel_sums[k] / channel_counts[k] for k in sorted(channel_sums)}
    return SimilarityScore(
        quality=float(np.mean(per_graph)),
        per_graph=np.asarray(per_graph),
        graph_keypoints=np.asarray(graph_keypoints, dtype=np.intp),
        per_channel_means=means,
        empty_graphs=empty,
        skipped_keypoints=skipped,
        keypoints=keypoints,
    )
