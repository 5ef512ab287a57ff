"""Dense voxel grids and the operations everything else is built on.

Grids store real values in [0, 1]; binary occupancy is the special case
where every value is exactly 0 or 1. Voxel (i, j, k) spans the unit cube
[i, i+1) x [j, j+1) x [k, k+1) in grid coordinates, so its center sits at
index + 0.5. World position = origin + grid coordinate * voxel_size.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

MAGIC = b"CVGR"
FORMAT_VERSION = 1

# Grids up to this edge length use the brute-force pairwise chamfer path;
# larger ones go through the exact euclidean distance transform.
_BRUTE_FORCE_MAX_DIM = 16


class GridFormatError(Exception):
    """Raised when a serialized grid is malformed."""


@dataclass
class VoxelGrid:
    values: NDArray[np.float64]
    voxel_size: float = 0.01
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ValueError(f"expected a 3-d value array, got shape {self.values.shape}")
        if any(n < 1 for n in self.values.shape):
            raise ValueError(f"grid axes must be non-empty, got shape {self.values.shape}")
        if self.voxel_size <= 0:
            raise ValueError("voxel_size must be positive")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.values.copy(), self.voxel_size, self.origin)

    def is_binary(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))

    def occupied_mask(self) -> NDArray[np.bool_]:
        return self.values > 0.5

    def occupied_indices(self) -> NDArray[np.int64]:
        """(N, 3) integer indices of occupied voxels, lexicographic order."""
        return np.argwhere(self.occupied_mask())

    def count_occupied(self) -> int:
        return int(np.count_nonzero(self.occupied_mask()))


def empty_grid(dims, voxel_size: float = 0.01, origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    return VoxelGrid(np.zeros(tuple(dims), dtype=np.float64), voxel_size, origin)


def grid_like(grid: VoxelGrid, values: NDArray | None = None) -> VoxelGrid:
    vals = np.zeros(grid.dims) if values is None else np.asarray(values, dtype=np.float64)
    return VoxelGrid(vals, grid.voxel_size, grid.origin)


def rasterize_boxes(dims, boxes, voxel_size: float = 0.01, origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    """Binary grid covering the union of axis-aligned boxes.

    Each box is (center, extents) in voxel units; a voxel is occupied when
    its center lies strictly inside the box along every axis.
    """
    grid = empty_grid(dims, voxel_size, origin)
    centers = [np.arange(n) + 0.5 for n in dims]
    for center, extents in boxes:
        center = np.asarray(center, dtype=float)
        extents = np.asarray(extents, dtype=float)
        if np.any(extents <= 0):
            raise ValueError(f"box extents must be positive, got {extents}")
        inside = np.ones(tuple(dims), dtype=bool)
        for a in range(3):
            ax_in = np.abs(centers[a] - center[a]) < extents[a] / 2.0
            shape = [1, 1, 1]
            shape[a] = dims[a]
            inside &= ax_in.reshape(shape)
        grid.values[inside] = 1.0
    return grid


def _check_compatible(a: VoxelGrid, b: VoxelGrid):
    if a.dims != b.dims:
        raise ValueError(f"grid dims differ: {a.dims} vs {b.dims}")
    if a.voxel_size != b.voxel_size:
        raise ValueError(f"voxel sizes differ: {a.voxel_size} vs {b.voxel_size}")


def threshold(grid: VoxelGrid, t: float) -> VoxelGrid:
    """Binary grid marking voxels with value strictly greater than t."""
    return grid_like(grid, (grid.values > t).astype(np.float64))


def overlap_count(a: VoxelGrid, b: VoxelGrid) -> int:
    _check_compatible(a, b)
    return int(np.count_nonzero(a.occupied_mask() & b.occupied_mask()))


def set_union(a: VoxelGrid, b: VoxelGrid) -> VoxelGrid:
    _check_compatible(a, b)
    return grid_like(a, (a.occupied_mask() | b.occupied_mask()).astype(np.float64))


def set_difference(a: VoxelGrid, b: VoxelGrid) -> VoxelGrid:
    _check_compatible(a, b)
    return grid_like(a, (a.occupied_mask() & ~b.occupied_mask()).astype(np.float64))


def chamfer_distance(a: VoxelGrid, b: VoxelGrid) -> float:
    """Symmetric chamfer distance between occupied-voxel centers, in meters.

    CD(A, B) = 0.5 * (mean_a min_b ||a - b|| + mean_b min_a ||a - b||).
    An empty grid has no surface to compare, so it is an error rather than
    an infinite distance.
    """
    _check_compatible(a, b)
    idx_a = a.occupied_indices()
    idx_b = b.occupied_indices()
    if len(idx_a) == 0 or len(idx_b) == 0:
        raise ValueError("chamfer distance is undefined for an empty grid")
    if max(a.dims) <= _BRUTE_FORCE_MAX_DIM:
        return _chamfer_brute(idx_a, idx_b, a.voxel_size)
    return _chamfer_edt(a, b, idx_a, idx_b)


def _chamfer_brute(idx_a, idx_b, voxel_size: float) -> float:
    pa = (idx_a + 0.5) * voxel_size
    pb = (idx_b + 0.5) * voxel_size
    d2 = np.sum((pa[:, None, :] - pb[None, :, :]) ** 2, axis=2)
    d = np.sqrt(d2)
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def _chamfer_edt(a: VoxelGrid, b: VoxelGrid, idx_a, idx_b) -> float:
    # distance_transform_edt measures to the nearest zero, so invert the mask
    dist_to_b = ndimage.distance_transform_edt(~b.occupied_mask(), sampling=a.voxel_size)
    dist_to_a = ndimage.distance_transform_edt(~a.occupied_mask(), sampling=a.voxel_size)
    d_ab = dist_to_b[idx_a[:, 0], idx_a[:, 1], idx_a[:, 2]].mean()
    d_ba = dist_to_a[idx_b[:, 0], idx_b[:, 1], idx_b[:, 2]].mean()
    return 0.5 * float(d_ab + d_ba)


# ---------------------------------------------------------------------------
# serialization: magic, version u16, dims 3xu32, voxel_size f64, origin 3xf64,
# then (value f32, count u32) run-length pairs over x-fastest voxel order.
# Everything little-endian.

_HEADER = struct.Struct("<4sH3I d 3d")
_RUN = struct.Struct("<fI")


def serialize(grid: VoxelGrid) -> bytes:
    flat = grid.values.astype(np.float32).flatten(order="F")
    out = [_HEADER.pack(MAGIC, FORMAT_VERSION, *grid.dims, grid.voxel_size, *grid.origin)]
    n = len(flat)
    i = 0
    while i < n:
        v = flat[i]
        j = i + 1
        while j < n and flat[j] == v:
            j += 1
        run = j - i
        while run > 0:
            chunk = min(run, 0xFFFFFFFF)
            out.append(_RUN.pack(v, chunk))
            run -= chunk
        i = j
    return b"".join(out)


def deserialize(blob: bytes) -> VoxelGrid:
    if len(blob) < _HEADER.size:
        raise GridFormatError("truncated header")
    magic, version, nx, ny, nz, voxel_size, ox, oy, oz = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise GridFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise GridFormatError(f"unsupported version {version}")
    total = nx * ny * nz
    flat = np.empty(total, dtype=np.float32)
    filled = 0
    offset = _HEADER.size
    while filled < total:
        if offset + _RUN.size > len(blob):
            raise GridFormatError("truncated payload")
        v, count = _RUN.unpack_from(blob, offset)
        offset += _RUN.size
        if filled + count > total:
            raise GridFormatError("payload overruns grid size")
        flat[filled:filled + count] = v
        filled += count
    if offset != len(blob):
        raise GridFormatError("trailing bytes after payload")
    values = flat.astype(np.float64).reshape((nx, ny, nz), order="F")
    return VoxelGrid(values, voxel_size, (ox, oy, oz))


def save(grid: VoxelGrid, path):
    with open(path, "wb") as fh:
        fh.write(serialize(grid))


def load(path) -> VoxelGrid:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridTransform:
    """Placement of an object's local grid inside the scene grid.

    The voxel-level part is an integer translation; `residual_m` keeps any
    sub-voxel world offset so nothing is silently rounded away. Grid
    resampling only ever uses the integer part.
    """

    shift: tuple[int, int, int]
    residual_m: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_scene(self, local_idx):
        idx = np.asarray(local_idx, dtype=np.int64)
        return idx + np.asarray(self.shift, dtype=np.int64)

    def to_local(self, scene_idx):
        idx = np.asarray(scene_idx, dtype=np.int64)
        return idx - np.asarray(self.shift, dtype=np.int64)

    def inverse(self) -> "GridTransform":
        s = tuple(-x for x in self.shift)
        r = tuple(-x for x in self.residual_m)
        return GridTransform(s, r)  # type: ignore[arg-type]


def transform_to_scene(local: VoxelGrid, transform: GridTransform, scene_dims) -> VoxelGrid:
    """Paste a local binary grid into scene coordinates, clipping at bounds."""
    out = empty_grid(scene_dims, local.voxel_size)
    _paste(local.occupied_mask(), out.values, np.asarray(transform.shift))
    return out


def transform_to_local(scene: VoxelGrid, transform: GridTransform, local_dims) -> VoxelGrid:
    """Crop a scene binary grid into an object's local frame."""
    out = empty_grid(local_dims, scene.voxel_size)
    _paste(scene.occupied_mask(), out.values, -np.asarray(transform.shift))
    return out


def _paste(src_mask: NDArray[np.bool_], dst: NDArray[np.float64], shift):
    src_dims = np.asarray(src_mask.shape)
    dst_dims = np.asarray(dst.shape)
    lo_dst = np.maximum(shift, 0)
    hi_dst = np.minimum(src_dims + shift, dst_dims)
    if np.any(hi_dst <= lo_dst):
        return
    lo_src = lo_dst - shift
    hi_src = hi_dst - shift
    region = src_mask[lo_src[0]:hi_src[0], lo_src[1]:hi_src[1], lo_src[2]:hi_src[2]]
    dst[lo_dst[0]:hi_dst[0], lo_dst[1]:hi_dst[1], lo_dst[2]:hi_dst[2]] = region.astype(np.float64)
