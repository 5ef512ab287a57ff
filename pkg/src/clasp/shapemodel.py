"""Latent shape model: a differentiable decoder plus a per-object prior.

A latent vector psi packs K axis-aligned soft boxes, 6 reals per box:
(cx, cy, cz, sx, sy, sz) with c the box center in voxel units and s the
log half-extent per axis. The decoder turns psi into a real-valued
occupancy grid; it is smooth in psi so constraint losses can be pushed
through it. An alternative affine decoder (sigmoid of a linear map) is
supported for experiments with learned weight matrices.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .voxelgrid import VoxelGrid

PARAMS_PER_BOX = 6
# Extents below half a voxel cannot cover any voxel center; used as the
# lower clamp when deriving log-extent spreads from feasible intervals.
MIN_HALF_EXTENT = 0.5
STDDEV_FLOOR = 1e-3

AFFINE_MAGIC = b"CAFD"


@dataclass(frozen=True)
class DecoderSpec:
    """Configuration of the analytic soft-box decoder.

    sharpness is the sigmoid steepness per voxel unit of signed distance to
    a box face; tau is the smooth-max temperature used to combine boxes.
    """

    dims: tuple[int, int, int]
    n_boxes: int = 1
    sharpness: float = 8.0
    tau: float = 0.1
    voxel_size: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 1 for d in self.dims) or len(self.dims) != 3:
            raise ValueError("dims must be three positive integers")
        if self.n_boxes < 1:
            raise ValueError("need at least one box")
        if self.sharpness <= 0 or self.tau <= 0:
            raise ValueError("sharpness and tau must be positive")

    @property
    def latent_size(self) -> int:
        return PARAMS_PER_BOX * self.n_boxes


@dataclass(frozen=True)
class AffineDecoderSpec:
    """sigmoid(W @ psi + b) over the flattened grid (x-fastest order)."""

    dims: tuple[int, int, int]
    weights: NDArray[np.float64]  # (n_voxels, latent_size)
    bias: NDArray[np.float64]     # (n_voxels,)
    voxel_size: float = 0.01

    def __post_init__(self):
        n = int(np.prod(self.dims))
        if self.weights.shape[0] != n or self.bias.shape != (n,):
            raise ValueError("weight shapes do not match grid dims")

    @property
    def latent_size(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class LatentPrior:
    """Diagonal Gaussian over latent vectors."""

    mean: NDArray[np.float64]
    stddev: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "stddev", np.asarray(self.stddev, dtype=np.float64))
        if self.mean.shape != self.stddev.shape:
            raise ValueError("mean and stddev shapes differ")
        if np.any(self.stddev < STDDEV_FLOOR):
            raise ValueError(f"stddev entries must be >= {STDDEV_FLOOR}")


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _box_products(spec: DecoderSpec, psi: NDArray, points: NDArray):
    """Per-box occupancy products and per-axis sigmoids at voxel centers.

    points: (M, 3) integer voxel indices. Returns (P, g, centers, log_ext)
    with P (M, K) and g (M, K, 3).
    """
    boxes = np.asarray(psi, dtype=np.float64).reshape(spec.n_boxes, PARAMS_PER_BOX)
    centers = boxes[:, :3]            # (K, 3)
    log_ext = boxes[:, 3:]
    half_ext = np.exp(log_ext)        # (K, 3)
    v = points.astype(np.float64) + 0.5             # voxel centers, (M, 3)
    diff = v[:, None, :] - centers[None, :, :]      # (M, K, 3)
    t = spec.sharpness * (half_ext[None, :, :] - np.abs(diff))
    g = _sigmoid(t)
    P = g.prod(axis=2)                              # (M, K)
    return P, g, diff, half_ext


def _smooth_max(P: NDArray, tau: float):
    """Normalized log-sum-exp over boxes; identity for K=1, stays in (0, 1).

    Returns the combined value and the softmax weights d(smax)/dP.
    """
    z = P / tau
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    sez = ez.sum(axis=1, keepdims=True)
    w = ez / sez
    val = tau * (np.log(sez[:, 0]) + zmax[:, 0] - np.log(P.shape[1]))
    return val, w


def soft_values_at(spec, psi, points: NDArray) -> NDArray[np.float64]:
    """Decoded occupancy at the given (M, 3) voxel indices."""
    points = np.atleast_2d(np.asarray(points, dtype=np.int64))
    if isinstance(spec, AffineDecoderSpec):
        flat = _affine_flat_index(spec, points)
        z = spec.weights[flat] @ np.asarray(psi, dtype=np.float64) + spec.bias[flat]
        return _sigmoid(z)
    P, _, _, _ = _box_products(spec, psi, points)
    val, _ = _smooth_max(P, spec.tau)
    return val


def soft_values_and_jacobian_at(spec, psi, points: NDArray):
    """Decoded occupancy and its jacobian w.r.t. psi at voxel indices.

    Returns (values (M,), jac (M, latent_size)).
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.int64))
    psi = np.asarray(psi, dtype=np.float64)
    if isinstance(spec, AffineDecoderSpec):
        flat = _affine_flat_index(spec, points)
        rows = spec.weights[flat]
        z = rows @ psi + spec.bias[flat]
        w = _sigmoid(z)
        jac = (w * (1.0 - w))[:, None] * rows
        return w, jac

    P, g, diff, half_ext = _box_products(spec, psi, points)
    val, smax_w = _smooth_max(P, spec.tau)
    k = spec.sharpness
    # dP/dc = P * (1 - g) * k * sign(v - c); dP/ds = P * (1 - g) * k * e.
    # The P * (1 - g) form avoids dividing by underflowed sigmoids.
    common = P[:, :, None] * (1.0 - g) * k          # (M, K, 3)
    dP_dc = common * np.sign(diff)
    dP_ds = common * half_ext[None, :, :]
    jac_boxes = np.concatenate([dP_dc, dP_ds], axis=2)   # (M, K, 6)
    jac = (smax_w[:, :, None] * jac_boxes).reshape(points.shape[0], -1)
    return val, jac


def _affine_flat_index(spec: AffineDecoderSpec, points: NDArray):
    nx, ny, nz = spec.dims
    if np.any(points < 0) or np.any(points >= np.asarray(spec.dims)):
        raise ValueError("point outside decoder grid")
    # weights rows follow x-fastest flattening, matching the grid file format
    return points[:, 0] + nx * (points[:, 1] + ny * points[:, 2])


def _grid_indices(dims) -> NDArray[np.int64]:
    # decode is called per particle per step; cache the index list per shape
    cached = _INDEX_CACHE.get(dims)
    if cached is None:
        cached = np.indices(dims).reshape(3, -1).T
        _INDEX_CACHE[dims] = cached
    return cached


_INDEX_CACHE: dict = {}


def decode(spec, psi, threshold: float | None = None) -> VoxelGrid:
    """Decode a latent vector into an occupancy grid.

    Real-valued by default; pass a threshold to binarize (strictly above).
    """
    dims = spec.dims
    vals = soft_values_at(spec, psi, _grid_indices(dims))
    if threshold is not None:
        vals = (vals > threshold).astype(np.float64)
    return VoxelGrid(vals.reshape(dims), spec.voxel_size)


def latent_for_boxes(boxes) -> NDArray[np.float64]:
    """Pack (center, extents)-in-voxels box tuples into a latent vector."""
    psi = []
    for center, extents in boxes:
        half = np.asarray(extents, dtype=float) / 2.0
        if np.any(half <= 0):
            raise ValueError("extents must be positive")
        psi.extend(np.asarray(center, dtype=float))
        psi.extend(np.log(half))
    return np.asarray(psi, dtype=np.float64)


# ---------------------------------------------------------------------------
# prior construction from a depth view


@dataclass(frozen=True)
class AuxBoxRegion:
    """Axis-aligned region an auxiliary (occluded) box is believed to lie in."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]


@dataclass(frozen=True)
class ObjectClassConfig:
    n_boxes: int = 1
    aux_regions: tuple[AuxBoxRegion, ...] = ()
    # half-width floor, in voxels, applied to depth-axis face intervals when
    # the rendered view carried sensor noise
    depth_slack_vox: float = 0.0

    def __post_init__(self):
        if len(self.aux_regions) != self.n_boxes - 1:
            raise ValueError("need one aux region per box beyond the first")


def prior_from_view(known_free: VoxelGrid, known_occupied: VoxelGrid,
                    class_config: ObjectClassConfig | None = None) -> LatentPrior:
    """Fit a diagonal Gaussian prior to what a single depth view allows.

    Per axis, each face of the primary box gets a feasible interval: faces
    adjacent to observed free space are pinned (zero-width interval, widened
    only by the configured noise slack), faces adjacent to occluded space
    range from the last observed-occupied coordinate out to the first free
    plane or the grid edge. Means are interval midpoints re-expressed as
    (center, log half-extent); stddevs are interval widths / 4 mapped into
    the same parameterization, floored at 1e-3. Auxiliary boxes take broad
    priors over their configured regions. An object with no visible surface
    gets the maximal-uncertainty prior over the whole grid.
    """
    cfg = class_config or ObjectClassConfig()
    dims = known_free.dims
    occ = known_occupied.occupied_indices()

    if len(occ) == 0:
        intervals = _maximal_intervals(dims)
    else:
        intervals = _primary_intervals(known_free, occ, cfg.depth_slack_vox)

    means, stds = _intervals_to_gaussian(intervals)
    for region in cfg.aux_regions:
        m, s = _intervals_to_gaussian(_region_intervals(region))
        means = np.concatenate([means, m])
        stds = np.concatenate([stds, s])
    return LatentPrior(means, stds)


def maximal_uncertainty_prior(dims, n_boxes: int = 1) -> LatentPrior:
    means, stds = _intervals_to_gaussian(_maximal_intervals(dims))
    means = np.tile(means, n_boxes)
    stds = np.tile(stds, n_boxes)
    return LatentPrior(means, stds)


def _maximal_intervals(dims):
    ivs = []
    for n in dims:
        ivs.append(((0.0, n / 2.0), (n / 2.0, float(n))))
    return ivs


def _region_intervals(region: AuxBoxRegion):
    ivs = []
    for lo, hi in zip(region.lo, region.hi):
        if hi <= lo:
            raise ValueError("aux region has non-positive extent")
        mid = (lo + hi) / 2.0
        ivs.append(((float(lo), mid), (mid, float(hi))))
    return ivs


def _primary_intervals(known_free: VoxelGrid, occ, depth_slack: float):
    """Face intervals for the box fitted to the observed occupied voxels."""
    dims = known_free.dims
    free = known_free.occupied_mask()
    o_lo = occ.min(axis=0)
    o_hi = occ.max(axis=0)

    intervals = []
    for a in range(3):
        others = [ax for ax in range(3) if ax != a]
        # restrict to the object's observed footprint in the other two axes
        sl = [slice(None)] * 3
        for ax in others:
            sl[ax] = slice(o_lo[ax], o_hi[ax] + 1)
        plane_free = free[tuple(sl)].any(axis=tuple(i for i in range(3) if i != a))

        lo_face_hi = float(o_lo[a])
        below = np.nonzero(plane_free[: o_lo[a]])[0]
        lo_face_lo = float(below.max() + 1) if len(below) else 0.0

        hi_face_lo = float(o_hi[a] + 1)
        above = np.nonzero(plane_free[o_hi[a] + 1:])[0]
        hi_face_hi = float(o_hi[a] + 1 + above.min()) if len(above) else float(dims[a])

        lo_iv = (lo_face_lo, lo_face_hi)
        hi_iv = (hi_face_lo, hi_face_hi)
        if a == 0 and depth_slack > 0:
            lo_iv = _widen(lo_iv, depth_slack, dims[a])
            hi_iv = _widen(hi_iv, depth_slack, dims[a])
        intervals.append((lo_iv, hi_iv))
    return intervals


def _widen(interval, min_width: float, n: float):
    lo, hi = interval
    if hi - lo >= min_width:
        return interval
    pad = (min_width - (hi - lo)) / 2.0
    return (max(lo - pad, 0.0), min(hi + pad, float(n)))


def _intervals_to_gaussian(axis_intervals):
    """Map per-axis face intervals to (c, s) means and stddevs.

    c is the average of the two face midpoints so sigma_c is a quarter of the
    induced center interval. For s = log half-extent the width/4 rule gives a
    stddev on the extent itself, carried into log space by dividing by the
    mean extent (the local slope of the transform).
    """
    mean = np.empty(PARAMS_PER_BOX)
    std = np.empty(PARAMS_PER_BOX)
    for a, ((lo_lo, lo_hi), (hi_lo, hi_hi)) in enumerate(axis_intervals):
        w_lo = lo_hi - lo_lo
        w_hi = hi_hi - hi_lo
        f_lo = (lo_lo + lo_hi) / 2.0
        f_hi = (hi_lo + hi_hi) / 2.0
        c = (f_lo + f_hi) / 2.0
        e = (f_hi - f_lo) / 2.0
        e = max(e, MIN_HALF_EXTENT)
        s = np.log(e)

        sigma_e = np.hypot(w_lo, w_hi) / 8.0
        sigma_s = sigma_e / e

        mean[a] = c
        mean[3 + a] = s
        std[a] = max((w_lo + w_hi) / 8.0, STDDEV_FLOOR)
        std[3 + a] = max(sigma_s, STDDEV_FLOOR)
    return mean, std


# ---------------------------------------------------------------------------
# sampling and density


def sample_latent(prior: LatentPrior, rng: np.random.Generator) -> NDArray[np.float64]:
    return prior.mean + prior.stddev * rng.standard_normal(prior.mean.shape)


def log_prob(prior: LatentPrior, psi) -> float:
    psi = np.asarray(psi, dtype=np.float64)
    z = (psi - prior.mean) / prior.stddev
    return float(-0.5 * np.sum(z * z) - np.sum(np.log(prior.stddev * np.sqrt(2.0 * np.pi))))


def log_prob_gradient(prior: LatentPrior, psi) -> NDArray[np.float64]:
    psi = np.asarray(psi, dtype=np.float64)
    return -(psi - prior.mean) / (prior.stddev ** 2)


# ---------------------------------------------------------------------------
# affine decoder weights file: magic, dims 3xu32, latent u32, f64 voxel size,
# then row-major f32 weights (n_voxels x latent) followed by f32 bias.


def save_affine(spec: AffineDecoderSpec, path):
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4s3I I d", AFFINE_MAGIC, *spec.dims,
                             spec.latent_size, spec.voxel_size))
        fh.write(spec.weights.astype("<f4").tobytes(order="C"))
        fh.write(spec.bias.astype("<f4").tobytes())


def load_affine(path) -> AffineDecoderSpec:
    head = struct.Struct("<4s3I I d")
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < head.size:
        raise ValueError("truncated affine decoder file")
    magic, nx, ny, nz, latent, voxel_size = head.unpack_from(blob, 0)
    if magic != AFFINE_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    n = nx * ny * nz
    need = head.size + 4 * n * latent + 4 * n
    if len(blob) != need:
        raise ValueError("affine decoder payload has wrong length")
    w = np.frombuffer(blob, dtype="<f4", count=n * latent, offset=head.size)
    b = np.frombuffer(blob, dtype="<f4", count=n, offset=head.size + 4 * n * latent)
    return AffineDecoderSpec((nx, ny, nz), w.reshape(n, latent).astype(np.float64),
                             b.astype(np.float64), voxel_size)
