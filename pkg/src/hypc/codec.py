"""Encode a flat weight vector into bit-packed codebook indices and back.

Pipeline: pair consecutive weights into 2-D points, center a box on their
centroid, classify points into distance rings, shrink each ring onto the box,
snap to the nearest codebook point, and store ``ring * num_points + index``
as a bit-packed integer stream. Decoding inverts every step exactly.

The whole-array path and the per-group reference path produce bit-identical
indices; the reference path doubles as the slow arm of the speed ablation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import (
    Codebook,
    CodebookConfig,
    DirectionMode,
    build_codebook,
    cached_codebook,
)
from .errors import ConsistencyError, DataError, FormatError

# Slack for points that sit on the outermost ring boundary up to rounding.
_OVER_RTOL = 1e-9
_OVER_ATOL = 1e-12


@dataclass(frozen=True)
class EncodeParams:
    """User-facing knobs for encoding one layer."""

    box_side: float = 0.1
    num_points: int = 225
    max_category: int = 3
    direction_mode: DirectionMode = DirectionMode.GRID_SHEAR


@dataclass(frozen=True)
class ScalePlan:
    """Per-pair ring index and the shrink factor applied before snapping."""

    categories: np.ndarray  # (G,) int64 in [0, max_category]
    scales: np.ndarray  # (G,) float64 in (0, 1]


@dataclass(frozen=True)
class EncodedLayer:
    """One compressed tensor: packed indices plus the geometry to invert them."""

    name: str
    shape: tuple[int, ...]
    element_count: int
    padded: bool
    config: CodebookConfig
    bit_width: int
    payload: bytes
    pad_value: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("layer name must be non-empty")
        if math.prod(self.shape) != self.element_count:
            raise ValueError(
                f"shape {self.shape} holds {math.prod(self.shape)} elements, "
                f"not {self.element_count}"
            )
        if self.padded != (self.element_count % 2 == 1):
            raise ValueError("padded flag must mark exactly the odd-length layers")
        if not 1 <= self.bit_width <= 32:
            raise ValueError(f"bit_width must be in [1, 32], got {self.bit_width}")
        expected = (self.group_count * self.bit_width + 7) // 8
        if len(self.payload) != expected:
            raise FormatError(
                f"payload of layer {self.name!r} is {len(self.payload)} bytes, "
                f"expected {expected}"
            )

    @property
    def group_count(self) -> int:
        return (self.element_count + 1) // 2


def group_pairs(weights) -> tuple[np.ndarray, bool, float]:
    """Split a flat weight vector into consecutive pairs.

    Odd lengths append one synthetic coordinate: the centroid x of the pairs
    formed by the even prefix plus the lone element duplicated. Returns
    (points (G, 2), padded, pad_value); pad_value is 0.0 when nothing was added.
    """
    flat = np.asarray(weights, dtype=np.float64).ravel()
    finite = np.isfinite(flat)
    if not finite.all():
        idx = int(np.nonzero(~finite)[0][0])
        raise DataError(f"weight {idx} is not finite: {flat[idx]}")
    if flat.size == 0:
        return np.zeros((0, 2), dtype=np.float64), False, 0.0
    if flat.size % 2 == 0:
        return flat.reshape(-1, 2), False, 0.0
    prefix = flat[:-1].reshape(-1, 2)
    lone = float(flat[-1])
    pad_value = float(np.vstack([prefix, [[lone, lone]]])[:, 0].mean())
    points = np.vstack([prefix, [[lone, pad_value]]])
    return points, True, pad_value


def _distances(points: np.ndarray, cx: float, cy: float) -> np.ndarray:
    dx = points[:, 0] - cx
    dy = points[:, 1] - cy
    return np.sqrt(dx * dx + dy * dy)


def _analyze(points: np.ndarray) -> tuple[tuple[float, float], float, np.ndarray]:
    center = points.mean(axis=0)
    cx, cy = float(center[0]), float(center[1])
    dists = _distances(points, cx, cy)
    return (cx, cy), float(dists.max()), dists


def analyze(points) -> tuple[tuple[float, float], float]:
    """Centroid (per-coordinate mean) and largest centroid distance of the pairs."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("analyze requires at least one point")
    centroid, max_radius, _ = _analyze(pts)
    return centroid, max_radius


def _ring_boundaries(box_side: float, max_radius: float, max_category: int) -> np.ndarray:
    half = box_side / 2.0
    step = max_radius / max_category
    return half + step * np.arange(1, max_category + 1, dtype=np.float64)


def _categorize_distances(
    dists: np.ndarray, box_side: float, max_radius: float, max_category: int
) -> np.ndarray:
    """Smallest ring index whose boundary reaches each distance; 0 inside the box."""
    half = box_side / 2.0
    outer_limit = (half + max_radius) * (1.0 + _OVER_RTOL) + _OVER_ATOL
    if max_category == 0:
        limit = half * (1.0 + _OVER_RTOL) + _OVER_ATOL
        if dists.size and dists.max() > limit:
            raise ConsistencyError(
                f"distance {dists.max()} exceeds box half-side {half} with no rings"
            )
        return np.zeros(dists.shape, dtype=np.int64)
    bands = _ring_boundaries(box_side, max_radius, max_category)
    cats = np.searchsorted(bands, dists, side="left").astype(np.int64) + 1
    cats[dists <= half] = 0
    over = cats > max_category
    if over.any():
        worst = float(dists[over].max())
        if worst > outer_limit:
            raise ConsistencyError(
                f"distance {worst} exceeds outermost ring {half + max_radius}"
            )
        cats[over] = max_category
    return cats


def categorize(point, centroid, max_radius: float, box_side: float, max_category: int) -> int:
    """Ring index of a single pair; see _categorize_distances for the rule."""
    px, py = float(point[0]), float(point[1])
    cx, cy = float(centroid[0]), float(centroid[1])
    dx = px - cx
    dy = py - cy
    d = np.sqrt(np.float64(dx * dx + dy * dy))
    cats = _categorize_distances(np.array([d]), box_side, max_radius, max_category)
    return int(cats[0])


def _scale_factors(
    categories: np.ndarray, box_side: float, max_radius: float, max_category: int
) -> np.ndarray:
    half = box_side / 2.0
    if max_category == 0:
        return np.ones(categories.shape, dtype=np.float64)
    step = max_radius / max_category
    return half / (half + step * categories)


def scale_factor(category: int, box_side: float, max_radius: float, max_category: int) -> float:
    """Shrink factor for one ring: 1 inside the box, then decreasing ring by ring."""
    if category < 0 or category > max_category:
        raise ValueError(f"category {category} outside [0, {max_category}]")
    if category == 0:
        return 1.0
    half = box_side / 2.0
    step = max_radius / max_category
    return float(half / (half + step * category))


def build_scale_plan(points: np.ndarray, config: CodebookConfig) -> ScalePlan:
    """Whole-array categorization and scale-factor list for a layer's pairs."""
    cx, cy = config.centroid
    dists = _distances(np.asarray(points, dtype=np.float64), cx, cy)
    return _plan_from_distances(dists, config)


def _plan_from_distances(dists: np.ndarray, config: CodebookConfig) -> ScalePlan:
    cats = _categorize_distances(
        dists, config.box_side, config.max_radius, config.max_category
    )
    scales = _scale_factors(cats, config.box_side, config.max_radius, config.max_category)
    cats.setflags(write=False)
    scales.setflags(write=False)
    return ScalePlan(cats, scales)


def _linear_scan_many(points: np.ndarray, queries: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Brute-force nearest index per query, first minimum on ties."""
    out = np.empty(len(queries), dtype=np.int64)
    px = points[:, 0]
    py = points[:, 1]
    for start in range(0, len(queries), chunk):
        q = queries[start : start + chunk]
        dsq = (q[:, 0, None] - px) ** 2 + (q[:, 1, None] - py) ** 2
        out[start : start + chunk] = np.argmin(dsq, axis=1)
    return out


def _encode_thetas(
    points: np.ndarray,
    dists: np.ndarray,
    config: CodebookConfig,
    codebook: Codebook,
    use_tree: bool,
    use_batch: bool,
) -> np.ndarray:
    num_points = config.num_points
    cx, cy = config.centroid
    if use_batch:
        plan = _plan_from_distances(dists, config)
        center = np.array([cx, cy])
        scaled = (points - center) * plan.scales[:, None] + center
        if use_tree:
            lam, _ = codebook.nearest_many(scaled)
        else:
            lam = _linear_scan_many(codebook.points, scaled)
        return plan.categories * num_points + lam

    # Per-group reference path; must reproduce the batch arithmetic exactly.
    half = config.box_side / 2.0
    max_cat = config.max_category
    step = (config.max_radius / max_cat) if max_cat else 0.0
    bands = [half + step * m for m in range(1, max_cat + 1)]
    outer_limit = (half + config.max_radius) * (1.0 + _OVER_RTOL) + _OVER_ATOL
    box_limit = half * (1.0 + _OVER_RTOL) + _OVER_ATOL
    pts = [(float(x), float(y)) for x, y in codebook.points]
    theta = np.empty(len(points), dtype=np.int64)
    for g in range(len(points)):
        d = float(dists[g])
        if d <= half:
            cat = 0
        else:
            cat = next((m for m in range(1, max_cat + 1) if d <= bands[m - 1]), None)
            if cat is None:
                limit = outer_limit if max_cat else box_limit
                if d > limit:
                    raise ConsistencyError(f"distance {d} exceeds outermost ring")
                cat = max_cat
        s = 1.0 if cat == 0 else half / (half + step * cat)
        ox = (float(points[g, 0]) - cx) * s + cx
        oy = (float(points[g, 1]) - cy) * s + cy
        if use_tree:
            lam = codebook.nearest((ox, oy))[0]
        else:
            best = 0
            best_dsq = math.inf
            for j, (px, py) in enumerate(pts):
                dx = ox - px
                dy = oy - py
                dsq = dx * dx + dy * dy
                if dsq < best_dsq:
                    best = j
                    best_dsq = dsq
            lam = best
        theta[g] = cat * num_points + lam
    return theta


def encode_layer(
    weights,
    name: str,
    shape,
    params: EncodeParams = EncodeParams(),
    *,
    use_tree: bool = True,
    use_batch: bool = True,
) -> EncodedLayer:
    """Compress one tensor into an EncodedLayer.

    ``use_tree`` / ``use_batch`` switch the spatial index and the whole-array
    arithmetic off; every combination returns byte-identical payloads.
    """
    shape = tuple(int(s) for s in shape)
    flat = np.asarray(weights, dtype=np.float64).ravel()
    if math.prod(shape) != flat.size:
        raise DataError(f"shape {shape} does not match {flat.size} weights")
    points, padded, pad_value = group_pairs(flat)
    if len(points) == 0:
        config = CodebookConfig(
            params.box_side, params.num_points, params.max_category,
            params.direction_mode, (0.0, 0.0), 0.0,
        )
        return EncodedLayer(name, shape, 0, False, config, 1, b"", 0.0)
    centroid, max_radius, dists = _analyze(points)
    config = CodebookConfig(
        params.box_side, params.num_points, params.max_category,
        params.direction_mode, centroid, max_radius,
    )
    codebook = build_codebook(config)
    theta = _encode_thetas(points, dists, config, codebook, use_tree, use_batch)
    bit_width = max(1, int(theta.max()).bit_length())
    payload = pack_bits(theta, bit_width)
    return EncodedLayer(
        name, shape, flat.size, padded, config, bit_width, payload, pad_value
    )


def decode_theta(
    theta: int, config: CodebookConfig, codebook: Codebook | None = None
) -> tuple[float, float]:
    """Invert one stored index into its weight pair."""
    if not 0 <= theta < config.theta_bound:
        raise FormatError(f"theta {theta} outside [0, {config.theta_bound})")
    if codebook is None:
        codebook = cached_codebook(config)
    num_points = config.num_points
    cat = theta // num_points
    lam = theta % num_points
    px, py = codebook.points[lam]
    s = scale_factor(cat, config.box_side, config.max_radius, config.max_category)
    cx, cy = config.centroid
    return (float(px) - cx) / s + cx, (float(py) - cy) / s + cy


def decode_layer(enc: EncodedLayer) -> np.ndarray:
    """Restore the layer's weights in original order (padding dropped), float64."""
    groups = enc.group_count
    if groups == 0:
        return np.zeros(0, dtype=np.float64)
    theta = unpack_bits(enc.payload, enc.bit_width, groups)
    bound = enc.config.theta_bound
    if int(theta.max()) >= bound:
        raise FormatError(
            f"layer {enc.name!r} holds theta {int(theta.max())} >= bound {bound}"
        )
    codebook = cached_codebook(enc.config)
    num_points = enc.config.num_points
    cats = theta // num_points
    lam = theta % num_points
    pts = codebook.points[lam]
    scales = _scale_factors(
        cats, enc.config.box_side, enc.config.max_radius, enc.config.max_category
    )
    center = np.array(enc.config.centroid)
    restored = (pts - center) / scales[:, None] + center
    return restored.reshape(-1)[: enc.element_count]


def pack_bits(values, bit_width: int) -> bytes:
    """Lay integers down LSB-first, bit_width bits each, no per-value padding."""
    if not 1 <= bit_width <= 32:
        raise ValueError(f"bit_width must be in [1, 32], got {bit_width}")
    arr = np.asarray(values)
    if arr.size == 0:
        return b""
    lo = int(arr.min())
    hi = int(arr.max())
    if lo < 0 or hi >= (1 << bit_width):
        raise ValueError(f"value {lo if lo < 0 else hi} does not fit in {bit_width} bits")
    arr = arr.astype(np.uint64).reshape(-1)
    bits = ((arr[:, None] >> np.arange(bit_width, dtype=np.uint64)) & np.uint64(1))
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()


def unpack_bits(data: bytes, bit_width: int, count: int) -> np.ndarray:
    """Exact inverse of pack_bits for the first ``count`` values."""
    if not 1 <= bit_width <= 32:
        raise ValueError(f"bit_width must be in [1, 32], got {bit_width}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    need = (count * bit_width + 7) // 8
    if len(data) < need:
        raise FormatError(f"payload holds {len(data)} bytes, need {need}")
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    raw = np.frombuffer(data, dtype=np.uint8, count=need)
    bits = np.unpackbits(raw, bitorder="little", count=count * bit_width)
    weights = np.arange(bit_width, dtype=np.uint64)
    vals = (bits.reshape(count, bit_width).astype(np.uint64) << weights).sum(
        axis=1, dtype=np.uint64
    )
    return vals.astype(np.int64)
