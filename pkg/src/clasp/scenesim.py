"""Simulated tabletop scenes: depth views and probe sweeps.

The scene is a voxel grid containing disjoint rigid objects, each with a
ground-truth occupancy in its own local grid plus an integer placement
transform. A depth sensor looks down the +x axis and yields known-free /
known-occupied labels per voxel; a probe is a voxel stencil swept along
waypoints that either traverses free space or stops at first contact,
emitting a collision hypothesis set (CHS): the stamp voxels not already
known to be free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .shapemodel import ObjectClassConfig
from .voxelgrid import GridTransform, VoxelGrid, empty_grid, transform_to_scene


@dataclass(frozen=True)
class SceneObject:
    name: str
    shape: VoxelGrid                 # ground-truth occupancy, local frame
    transform: GridTransform         # local -> scene
    class_config: ObjectClassConfig

    def __post_init__(self):
        if self.shape.count_occupied() == 0:
            raise ValueError(f"object {self.name!r} has empty ground truth")


@dataclass(frozen=True)
class Scene:
    dims: tuple[int, int, int]
    voxel_size: float
    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        owner = _owner_array(self)
        # disjointness: _owner_array raises on overlap
        del owner

    def occupancy(self) -> VoxelGrid:
        """Union of all objects' ground truth in the scene frame."""
        grid = empty_grid(self.dims, self.voxel_size)
        for obj in self.objects:
            placed = transform_to_scene(obj.shape, obj.transform, self.dims)
            grid.values = np.maximum(grid.values, placed.values)
        return grid

    def owner(self) -> NDArray[np.int64]:
        """Per-voxel object index, -1 where empty."""
        return _owner_array(self)


def _owner_array(scene: Scene) -> NDArray[np.int64]:
    owner = np.full(scene.dims, -1, dtype=np.int64)
    for j, obj in enumerate(scene.objects):
        placed = transform_to_scene(obj.shape, obj.transform, scene.dims)
        mask = placed.occupied_mask()
        if np.any(owner[mask] >= 0):
            raise ValueError(f"object {obj.name!r} overlaps another object")
        owner[mask] = j
    return owner


@dataclass(frozen=True)
class DepthView:
    """Single-frame depth labeling of the scene grid."""

    known_free: VoxelGrid
    known_occupied: VoxelGrid
    owner: NDArray[np.int64]         # object index per known-occupied voxel, -1 elsewhere


def _bilinear_upsample(field: NDArray[np.float64], ny: int, nz: int):
    """Resize a small 2-d field to (ny, nz) with bilinear interpolation."""
    sy, sz = field.shape

    def coords(n, s):
        pos = (np.arange(n) + 0.5) * s / n - 0.5
        return np.clip(pos, 0.0, s - 1.0)

    py, pz = coords(ny, sy), coords(nz, sz)
    y0 = np.floor(py).astype(int)
    z0 = np.floor(pz).astype(int)
    y1 = np.minimum(y0 + 1, sy - 1)
    z1 = np.minimum(z0 + 1, sz - 1)
    fy = (py - y0)[:, None]
    fz = (pz - z0)[None, :]
    return (field[np.ix_(y0, z0)] * (1 - fy) * (1 - fz)
            + field[np.ix_(y1, z0)] * fy * (1 - fz)
            + field[np.ix_(y0, z1)] * (1 - fy) * fz
            + field[np.ix_(y1, z1)] * fy * fz)


NOISE_FIELD_SHAPE = (16, 16)


def render_depth_view(scene: Scene, rng: np.random.Generator | None = None,
                      noise_std_m: float = 0.0) -> DepthView:
    """Render the +x-facing depth camera.

    Each (y, z) column scans along x: voxels strictly before the first hit
    are known free, the hit voxel is known occupied (attributed to the
    object owning the true first surface), everything behind stays unknown.
    Columns with no hit are entirely free. Optional sensor noise is a
    low-resolution Gaussian field, bilinearly upscaled across the image and
    applied as a per-column depth shift in whole voxels.
    """
    nx, ny, nz = scene.dims
    occ = scene.occupancy().occupied_mask()
    owner = scene.owner()

    has_hit = occ.any(axis=0)
    depth = np.argmax(occ, axis=0)           # first occupied x per column

    if noise_std_m > 0.0:
        if rng is None:
            raise ValueError("noise requires an rng")
        field = rng.normal(0.0, noise_std_m, size=NOISE_FIELD_SHAPE)
        shift = np.rint(_bilinear_upsample(field, ny, nz) / scene.voxel_size)
        noisy = np.clip(depth + shift.astype(int), 0, nx - 1)
    else:
        noisy = depth

    xs = np.arange(nx)[:, None, None]
    free = xs < np.where(has_hit, noisy, nx)[None, :, :]

    occupied = np.zeros(scene.dims, dtype=bool)
    view_owner = np.full(scene.dims, -1, dtype=np.int64)
    yy, zz = np.nonzero(has_hit)
    occupied[noisy[yy, zz], yy, zz] = True
    view_owner[noisy[yy, zz], yy, zz] = owner[depth[yy, zz], yy, zz]

    free_grid = empty_grid(scene.dims, scene.voxel_size)
    free_grid.values[free] = 1.0
    occ_grid = empty_grid(scene.dims, scene.voxel_size)
    occ_grid.values[occupied] = 1.0
    return DepthView(free_grid, occ_grid, view_owner)


@dataclass(frozen=True)
class ProbeMotion:
    """A voxel stencil swept through min-corner waypoints, one at a time."""

    stencil: NDArray[np.bool_]       # 3-d, True where the probe occupies
    waypoints: NDArray[np.int64]     # (T, 3) min-corner positions

    def __post_init__(self):
        stencil = np.asarray(self.stencil, dtype=bool)
        waypoints = np.asarray(self.waypoints, dtype=np.int64)
        if stencil.ndim != 3 or not stencil.any():
            raise ValueError("stencil must be a non-empty 3-d mask")
        if waypoints.ndim != 2 or waypoints.shape[1] != 3 or len(waypoints) == 0:
            raise ValueError("waypoints must be a non-empty (T, 3) array")
        steps = np.abs(np.diff(waypoints, axis=0))
        if steps.size and steps.max() > 1:
            raise ValueError("waypoints must move at most one voxel per axis")
        object.__setattr__(self, "stencil", stencil)
        object.__setattr__(self, "waypoints", waypoints)

    def stamp_indices(self, waypoint) -> NDArray[np.int64]:
        return np.argwhere(self.stencil) + np.asarray(waypoint, dtype=np.int64)

    def stamp_union(self, dims) -> NDArray[np.int64]:
        """All voxels covered across the full sweep (for planning)."""
        mask = np.zeros(dims, dtype=bool)
        for wp in self.waypoints:
            pts = self.stamp_indices(wp)
            mask[pts[:, 0], pts[:, 1], pts[:, 2]] = True
        return np.argwhere(mask)


@dataclass(frozen=True)
class CollisionHypothesisSet:
    """Voxels that may contain the surface that stopped the probe."""

    region: VoxelGrid

    def __post_init__(self):
        if self.region.count_occupied() == 0:
            raise ValueError("empty collision hypothesis set")


@dataclass(frozen=True)
class Observation:
    """Outcome of one probe sweep."""

    swept_free: VoxelGrid
    chs: CollisionHypothesisSet | None
    true_contact: VoxelGrid | None   # oracle: stamp voxels on the real surface
    stop_index: int

    @property
    def contact(self) -> bool:
        return self.chs is not None


def sweep_probe(scene: Scene, motion: ProbeMotion,
                known_free: VoxelGrid) -> Observation:
    """Sweep the probe until first contact with the ground-truth scene.

    Every fully traversed stamp is added to the swept free volume. On
    contact the sweep stops and the CHS is the contact stamp minus all
    voxels already known free (from vision or this sweep). Raises if any
    stamp leaves the grid.
    """
    occ = scene.occupancy().occupied_mask()
    dims = np.asarray(scene.dims)
    free_mask = known_free.occupied_mask()

    swept = empty_grid(scene.dims, scene.voxel_size)
    swept_mask = swept.occupied_mask()

    for t, wp in enumerate(motion.waypoints):
        pts = motion.stamp_indices(wp)
        if np.any(pts < 0) or np.any(pts >= dims):
            raise ValueError(f"probe stamp leaves the grid at waypoint {t}")
        hit = occ[pts[:, 0], pts[:, 1], pts[:, 2]]
        if hit.any():
            contact = empty_grid(scene.dims, scene.voxel_size)
            cpts = pts[hit]
            contact.values[cpts[:, 0], cpts[:, 1], cpts[:, 2]] = 1.0

            region = empty_grid(scene.dims, scene.voxel_size)
            keep = ~(free_mask[pts[:, 0], pts[:, 1], pts[:, 2]]
                     | swept_mask[pts[:, 0], pts[:, 1], pts[:, 2]])
            rpts = pts[keep]
            region.values[rpts[:, 0], rpts[:, 1], rpts[:, 2]] = 1.0
            swept.values[swept_mask] = 1.0
            return Observation(swept, CollisionHypothesisSet(region), contact, t)
        swept_mask[pts[:, 0], pts[:, 1], pts[:, 2]] = True

    swept.values[swept_mask] = 1.0
    return Observation(swept, None, None, len(motion.waypoints) - 1)


def binary_entropy(p: NDArray[np.float64]) -> NDArray[np.float64]:
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    out = np.zeros_like(p)
    inner = (p > 0.0) & (p < 1.0)
    q = p[inner]
    out[inner] = -(q * np.log2(q) + (1.0 - q) * np.log2(1.0 - q))
    return out


def select_informative_probe(candidates, occupancy_freq: NDArray[np.float64],
                             dims) -> int:
    """Pick the sweep whose covered voxels carry the most belief entropy.

    Scores each candidate by the summed binary entropy of the per-voxel
    occupancy frequency over the union of its stamps; ties break toward
    the lowest candidate index.
    """
    if not candidates:
        raise ValueError("no candidate probes")
    best, best_score = 0, -1.0
    for i, motion in enumerate(candidates):
        pts = motion.stamp_union(dims)
        score = float(binary_entropy(occupancy_freq[pts[:, 0], pts[:, 1], pts[:, 2]]).sum())
        if score > best_score + 1e-12:
            best, best_score = i, score
    return best
