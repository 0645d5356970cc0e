"""Reproducible experiment instances: weighted chains, planted partitions,
and pixel-grid graphs with seed regions.

Also houses the PPM/PGM file formats used by the segmentation pipeline:
images are PPM (P6/P3), trimaps PGM (P5/P2) with 0 -> background seed (R3),
128 -> unknown (R2), 255 -> foreground seed (R1); masks are PGM with 255 for
foreground.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import (
    ConnectivityRetryExhausted,
    DegenerateImage,
    DimensionMismatch,
    EmptyRegion,
    FileFormatError,
    InvalidSpec,
)
from .graph import DataGraph, build_graph, is_connected
from .signals import Partition, SamplingSet, make_partition, make_sampling_set

# smallest allowed edge weight; the similarity kernel may underflow for
# strongly contrasting pixels and weights must stay strictly positive
_WEIGHT_FLOOR = 1e-200

PLACEMENT_BOUNDARY = "boundary"
PLACEMENT_CENTER = "center"
PLACEMENT_RANDOM = "random"


@dataclasses.dataclass(frozen=True)
class ChainSpec:
    """Chain of equal consecutive clusters with strong intra / weak inter weights."""

    n: int
    cluster_size: int = 5
    w_intra: float = 2.0
    w_inter: float = 1.0
    coeff_low: float = 1.0
    coeff_high: float = 5.0
    placement: str = PLACEMENT_BOUNDARY
    seed: int | None = None

    def __post_init__(self):
        if self.cluster_size < 1:
            raise InvalidSpec("cluster_size must be >= 1")
        if self.n % self.cluster_size != 0:
            raise InvalidSpec(f"n={self.n} must be a multiple of cluster_size={self.cluster_size}")
        if self.n < 2 * self.cluster_size:
            raise InvalidSpec(f"n={self.n} must be >= 2 * cluster_size")
        if not (self.w_intra > 0 and self.w_inter > 0):
            raise InvalidSpec("weights must be positive")
        if self.placement not in (PLACEMENT_BOUNDARY, PLACEMENT_CENTER, PLACEMENT_RANDOM):
            raise InvalidSpec(f"unknown placement {self.placement!r}")
        if self.placement == PLACEMENT_RANDOM and self.seed is None:
            raise InvalidSpec("random placement needs a seed")


def chain_instance(spec: ChainSpec):
    """Build the chain benchmark: graph, partition, clustered truth, samples.

    Clusters are runs of `cluster_size` consecutive nodes; edges inside a
    cluster weigh `w_intra`, edges crossing clusters `w_inter`.  Truth
    alternates coeff_low/coeff_high per cluster.  The sampling set takes one
    node per cluster: with "boundary" placement the node adjacent to the
    cluster's right boundary (the last cluster uses its first node, so a
    two-cluster chain samples both endpoints of its single boundary edge),
    with "center" the middle node, with "random" a seeded uniform pick.
    """
    n, cs = spec.n, spec.cluster_size
    k = n // cs
    ii = np.arange(n - 1, dtype=np.int64)
    jj = ii + 1
    ww = np.where((ii + 1) % cs == 0, spec.w_inter, spec.w_intra)
    g = build_graph(n, (ii, jj, ww))

    cluster_of = np.arange(n, dtype=np.int64) // cs
    f = make_partition(cluster_of)
    coeffs = np.where(np.arange(k) % 2 == 0, spec.coeff_low, spec.coeff_high)
    truth = coeffs[cluster_of]

    base = np.arange(k, dtype=np.int64) * cs
    if spec.placement == PLACEMENT_BOUNDARY:
        nodes = base + cs - 1
        nodes[-1] = base[-1]
    elif spec.placement == PLACEMENT_CENTER:
        nodes = base + cs // 2
    else:
        rng = np.random.default_rng(spec.seed)
        nodes = base + rng.integers(0, cs, size=k)
    samples = make_sampling_set(nodes, truth[nodes])
    return g, f, truth, samples


@dataclasses.dataclass(frozen=True)
class PlantedPartitionSpec:
    """Community graph with dense intra-cluster and sparse inter-cluster edges."""

    n: int
    clusters: int
    p_in: float
    p_out: float
    w_lo: float = 1.0
    w_hi: float = 2.0
    seed: int = 0
    max_retries: int = 50

    def __post_init__(self):
        if self.clusters < 2 or self.n < self.clusters:
            raise InvalidSpec("need at least 2 clusters and n >= clusters")
        if not (0.0 < self.p_out < self.p_in <= 1.0):
            raise InvalidSpec("need 0 < p_out < p_in <= 1")
        if not (0.0 < self.w_lo <= self.w_hi):
            raise InvalidSpec("need 0 < w_lo <= w_hi")


def planted_partition_instance(spec: PlantedPartitionSpec):
    """Sample a connected planted-partition graph.

    Returns ``(graph, partition, truth, sampler)``; labels are the 1-based
    cluster index, and ``sampler(size, seed)`` draws a uniform sampling set
    without replacement carrying the true labels.  Regenerates (continuing
    the seeded stream) until connected, up to max_retries.
    """
    sizes = np.full(spec.clusters, spec.n // spec.clusters, dtype=np.int64)
    sizes[: spec.n % spec.clusters] += 1
    cluster_of = np.repeat(np.arange(spec.clusters), sizes)
    iu, ju = np.triu_indices(spec.n, k=1)
    p_pair = np.where(cluster_of[iu] == cluster_of[ju], spec.p_in, spec.p_out)

    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.max_retries):
        keep = rng.random(iu.size) < p_pair
        ww = rng.uniform(spec.w_lo, spec.w_hi, size=int(keep.sum()))
        g = build_graph(spec.n, (iu[keep], ju[keep], ww))
        if is_connected(g):
            break
    else:
        raise ConnectivityRetryExhausted(
            f"no connected sample in {spec.max_retries} tries (p_out too small?)"
        )

    f = make_partition(cluster_of)
    truth = (cluster_of + 1).astype(np.float64)

    def sampler(size, seed) -> SamplingSet:
        srng = np.random.default_rng(seed)
        nodes = srng.choice(spec.n, size=size, replace=False)
        return make_sampling_set(nodes, truth[nodes])

    return g, f, truth, sampler


@dataclasses.dataclass(frozen=True)
class ImageGridSpec:
    """RGB pixels plus a trimap splitting pixels into seed/unknown regions."""

    pixels: np.ndarray
    trimap: np.ndarray

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


TRIMAP_BACKGROUND = 0    # R3, seeded -1
TRIMAP_UNKNOWN = 128     # R2
TRIMAP_FOREGROUND = 255  # R1, seeded +1


def make_image_grid_spec(pixels, trimap) -> ImageGridSpec:
    pixels = np.asarray(pixels)
    trimap = np.asarray(trimap)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise InvalidSpec(f"pixels must be (H, W, 3), got {pixels.shape}")
    if trimap.shape != pixels.shape[:2]:
        raise DimensionMismatch(
            f"trimap shape {trimap.shape} does not match image {pixels.shape[:2]}"
        )
    allowed = {TRIMAP_BACKGROUND, TRIMAP_UNKNOWN, TRIMAP_FOREGROUND}
    values = set(int(v) for v in np.unique(trimap))
    if not values <= allowed:
        raise InvalidSpec(f"trimap values {sorted(values - allowed)} not in {sorted(allowed)}")
    return ImageGridSpec(pixels=pixels.astype(np.uint8), trimap=trimap.astype(np.uint8))


def image_grid_graph(spec: ImageGridSpec):
    """4-neighbor grid graph with similarity weights, plus the seed labels.

    Edge weights are exp(-||v_i - v_j||^2 / sigma) with sigma the median
    RGB-difference norm over the grid edges; a constant image (sigma = 0)
    gets unit weights.  Weights are floored at a tiny positive value so
    underflow cannot produce a zero weight.  The sampling set is the seed
    regions: +1 on foreground (R1), -1 on background (R3).
    """
    h, w = spec.height, spec.width
    n = h * w
    if n < 2:
        raise DegenerateImage("need at least 2 pixels")
    fg = spec.trimap == TRIMAP_FOREGROUND
    bg = spec.trimap == TRIMAP_BACKGROUND
    if not fg.any():
        raise EmptyRegion("foreground seed region (R1) is empty")
    if not bg.any():
        raise EmptyRegion("background seed region (R3) is empty")

    ids = np.arange(n, dtype=np.int64).reshape(h, w)
    uu = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    vv = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    colors = spec.pixels.reshape(n, 3).astype(np.float64)
    delta = np.linalg.norm(colors[uu] - colors[vv], axis=1)
    sigma = float(np.median(delta))
    if sigma == 0.0:
        ww = np.ones(delta.size)
    else:
        ww = np.maximum(np.exp(-(delta * delta) / sigma), _WEIGHT_FLOOR)
    g = build_graph(n, (uu, vv, ww))

    labels = np.where(fg.ravel(), 1.0, -1.0)
    nodes = np.flatnonzero(fg.ravel() | bg.ravel())
    samples = make_sampling_set(nodes, labels[nodes])
    return g, samples


def segment(labels, trimap) -> np.ndarray:
    """Classify pixels as foreground from solved labels.

    Unknown (R2) pixels become foreground iff their label is strictly
    positive; seed pixels keep their trimap region.  Returns a boolean mask.
    """
    trimap = np.asarray(trimap)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (trimap.size,):
        raise DimensionMismatch(
            f"labels shape {labels.shape} does not match {trimap.size} pixels"
        )
    fg = trimap == TRIMAP_FOREGROUND
    unknown = trimap == TRIMAP_UNKNOWN
    grid_labels = labels.reshape(trimap.shape)
    return fg | (unknown & (grid_labels > 0.0))


def _dilate4(mask, rounds):
    out = mask.copy()
    for _ in range(rounds):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def synthetic_two_tone(width=32, height=32, band_halfwidth=1, seed=0,
                       tone_fg=(90, 90, 90), tone_bg=(110, 110, 110), noise=2):
    """Two-tone test image with a centered square foreground and a trimap.

    The unknown region is a band of ``2 * band_halfwidth`` pixels straddling
    the true foreground boundary; everything else is seeded.  Mild seeded
    pixel noise keeps the median edge contrast positive so the similarity
    weights separate the two tones.  Returns ``(pixels, trimap, truth_mask)``.
    """
    if width < 8 or height < 8:
        raise InvalidSpec("image too small for a banded trimap")
    truth = np.zeros((height, width), dtype=bool)
    truth[height // 4: height - height // 4, width // 4: width - width // 4] = True

    rng = np.random.default_rng(seed)
    base = np.where(truth[..., None], np.asarray(tone_fg, dtype=np.int64),
                    np.asarray(tone_bg, dtype=np.int64))
    jitter = rng.integers(-noise, noise + 1, size=(height, width, 3))
    pixels = np.clip(base + jitter, 0, 255).astype(np.uint8)

    # within band_halfwidth steps of both regions: a 2*band_halfwidth-wide band
    band = _dilate4(truth, band_halfwidth) & _dilate4(~truth, band_halfwidth)
    trimap = np.where(band, TRIMAP_UNKNOWN,
                      np.where(truth, TRIMAP_FOREGROUND, TRIMAP_BACKGROUND)).astype(np.uint8)
    return pixels, trimap, truth


# -- netpbm file formats ------------------------------------------------------


def _read_netpbm(path, magics):
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            c = data[pos: pos + 1]
            if c == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos: pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FileFormatError("truncated netpbm header", path=path)
        return data[start:pos]

    magic = next_token().decode("ascii", "replace")
    if magic not in magics:
        raise FileFormatError(f"unsupported magic {magic!r}, expected one of {magics}", path=path)
    try:
        w = int(next_token())
        h = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise FileFormatError(f"bad netpbm header: {exc}", path=path) from None
    if w < 1 or h < 1:
        raise FileFormatError(f"bad dimensions {w}x{h}", path=path)
    if not 0 < maxval <= 255:
        raise FileFormatError(f"unsupported maxval {maxval} (only 8-bit supported)", path=path)

    channels = 3 if magic in ("P3", "P6") else 1
    count = w * h * channels
    if magic in ("P5", "P6"):
        pos += 1  # single whitespace byte separates header from raster
        raster = data[pos: pos + count]
        if len(raster) != count:
            raise FileFormatError(
                f"raster has {len(raster)} bytes, expected {count}", path=path
            )
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        body = data[pos:]
        # plain formats may carry comments inside the raster as well
        lines = [ln.split(b"#", 1)[0] for ln in body.split(b"\n")]
        tokens = b" ".join(lines).split()
        if len(tokens) != count:
            raise FileFormatError(
                f"raster has {len(tokens)} values, expected {count}", path=path
            )
        try:
            values = np.asarray([int(t) for t in tokens], dtype=np.int64)
        except ValueError as exc:
            raise FileFormatError(f"bad raster value: {exc}", path=path) from None
    if values.min() < 0 or values.max() > maxval:
        raise FileFormatError("raster value outside [0, maxval]", path=path)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return values.reshape(shape).astype(np.uint8)


def read_ppm(path) -> np.ndarray:
    """Read a binary or ASCII PPM image into an (H, W, 3) uint8 array."""
    return _read_netpbm(path, ("P6", "P3"))


def read_pgm(path) -> np.ndarray:
    """Read a binary or ASCII PGM image into an (H, W) uint8 array."""
    return _read_netpbm(path, ("P5", "P2"))


def write_ppm(path, pixels):
    pixels = np.asarray(pixels, dtype=np.uint8)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise InvalidSpec(f"pixels must be (H, W, 3), got {pixels.shape}")
    h, w = pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def write_pgm(path, gray):
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise InvalidSpec(f"gray image must be (H, W), got {gray.shape}")
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def write_mask_pgm(path, mask):
    """Write a boolean foreground mask as PGM (255 = foreground)."""
    write_pgm(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))
