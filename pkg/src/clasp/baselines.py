"""Comparison methods that operate on whole scenes rather than projecting.

All of them sample every object's latent from its prior and judge the
decoded scene union against the same constraints the particle filter uses:
known free space must stay clear and every contact region must contain at
least one occupied voxel. Violations are counted per known-free voxel the
sample occupies and per contact region it leaves unexplained, so a zero
count is exactly the hard constraint check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import shapemodel
from .belief import ObjectModel
from .projection import ProjectionConfig
from .shapemodel import LatentPrior, ObjectClassConfig
from .voxelgrid import VoxelGrid, _paste, grid_like


@dataclass(frozen=True)
class ViolationCount:
    unexplained_chs: int
    free_violations: int

    @property
    def total(self) -> int:
        return self.unexplained_chs + self.free_violations


@dataclass(frozen=True)
class SceneSample:
    """One scene draw: latents, the thresholded union decode, violations."""

    psis: tuple[NDArray[np.float64], ...]
    shape: VoxelGrid
    violations: ViolationCount

    @property
    def accepted(self) -> bool:
        return self.violations.total == 0


def scene_soft_values(objects: list[ObjectModel], psis,
                      dims) -> NDArray[np.float64]:
    """Scene-frame soft occupancy: per voxel the max over all objects.

    Pastes the real-valued decodes (transform_to_scene would binarize,
    which breaks the zero-violations == hard-check equivalence for free
    voxels decoding between delta and the occupancy threshold).
    """
    out = np.zeros(dims, dtype=np.float64)
    for obj, psi in zip(objects, psis):
        local = shapemodel.decode(obj.spec, psi, threshold=None)
        placed = np.zeros(dims, dtype=np.float64)
        _paste(local.values, placed, np.asarray(obj.transform.shift))
        np.maximum(out, placed, out=out)
    return out


def violation_count(soft: NDArray[np.float64], known_free: VoxelGrid,
                    chs_regions: list[VoxelGrid],
                    config: ProjectionConfig | None = None) -> ViolationCount:
    """Count constraint violations of a scene's soft occupancy.

    Free violations are known-free voxels whose soft value exceeds delta;
    unexplained contacts are regions with no voxel above the occupancy
    threshold. A total of zero is equivalent to the projection module's
    hard constraint check on every object.
    """
    cfg = config or ProjectionConfig()
    free = int(np.count_nonzero(soft[known_free.occupied_mask()] > cfg.delta))
    unexplained = 0
    for region in chs_regions:
        if not np.any(soft[region.occupied_mask()] > cfg.occupancy_threshold):
            unexplained += 1
    return ViolationCount(unexplained, free)


def draw_scene_sample(objects: list[ObjectModel], known_free: VoxelGrid,
                      chs_regions: list[VoxelGrid], rng: np.random.Generator,
                      config: ProjectionConfig | None = None) -> SceneSample:
    cfg = config or ProjectionConfig()
    psis = tuple(shapemodel.sample_latent(obj.prior, rng) for obj in objects)
    soft = scene_soft_values(objects, psis, known_free.dims)
    shape = grid_like(known_free)
    shape.values[soft > cfg.occupancy_threshold] = 1.0
    return SceneSample(psis, shape,
                       violation_count(soft, known_free, chs_regions, cfg))


def rejection_sample(objects: list[ObjectModel], known_free: VoxelGrid,
                     chs_regions: list[VoxelGrid], n: int,
                     rng: np.random.Generator,
                     config: ProjectionConfig | None = None) -> list[SceneSample]:
    """n independent prior draws with their violation counts. Accepted
    samples are the zero-violation ones."""
    if n < 1:
        raise ValueError("need at least one sample")
    return [draw_scene_sample(objects, known_free, chs_regions, rng, config)
            for _ in range(n)]


def direct_edit(shape: VoxelGrid, known_free: VoxelGrid,
                true_contact: VoxelGrid) -> VoxelGrid:
    """Oracle repair: carve out known free space, stamp in the voxels the
    probe actually touched. (shape \\ known_free) | true_contact."""
    if shape.dims != known_free.dims or shape.dims != true_contact.dims:
        raise ValueError("grid dimensions mismatch")
    out = grid_like(shape)
    mask = (shape.occupied_mask() & ~known_free.occupied_mask()) \
        | true_contact.occupied_mask()
    out.values[mask] = 1.0
    return out


@dataclass(frozen=True)
class SoftRejectionOutcome:
    samples: list[SceneSample]
    selected: tuple[int, ...]        # indices into samples
    shapes: tuple[VoxelGrid, ...]    # accepted as-is, or min-violators edited
    edited: bool


def soft_rejection_sample(objects: list[ObjectModel], known_free: VoxelGrid,
                          chs_regions: list[VoxelGrid], n: int,
                          rng: np.random.Generator, true_contact: VoxelGrid,
                          config: ProjectionConfig | None = None
                          ) -> SoftRejectionOutcome:
    """Rejection sampling with a fallback: when nothing is accepted, keep
    every sample tied at the minimum violation count and repair each with
    the direct edit (which uses the oracle contact voxels)."""
    samples = rejection_sample(objects, known_free, chs_regions, n, rng, config)
    accepted = [i for i, s in enumerate(samples) if s.accepted]
    if accepted:
        return SoftRejectionOutcome(samples, tuple(accepted),
                                    tuple(samples[i].shape for i in accepted),
                                    edited=False)
    best = min(s.violations.total for s in samples)
    selected = tuple(i for i, s in enumerate(samples)
                     if s.violations.total == best)
    shapes = tuple(direct_edit(samples[i].shape, known_free, true_contact)
                   for i in selected)
    return SoftRejectionOutcome(samples, selected, shapes, edited=True)


def combined_input_prior(class_config: ObjectClassConfig,
                         vision_free: VoxelGrid, vision_occ: VoxelGrid,
                         robot_free: VoxelGrid,
                         contact_voxels: VoxelGrid) -> LatentPrior:
    """Prior from an augmented view: robot-swept free space merged into the
    free channel, touched voxels merged into the occupied channel. A voxel
    claimed by both channels is a contradiction and raises."""
    free = vision_free.occupied_mask() | robot_free.occupied_mask()
    occ = vision_occ.occupied_mask() | contact_voxels.occupied_mask()
    if np.any(free & occ):
        raise ValueError("augmented view marks a voxel both free and occupied")
    free_grid = grid_like(vision_free)
    free_grid.values[free] = 1.0
    occ_grid = grid_like(vision_occ)
    occ_grid.values[occ] = 1.0
    return shapemodel.prior_from_view(free_grid, occ_grid, class_config)
