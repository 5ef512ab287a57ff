"""Particle filter over scenes of latent box shapes.

A particle is one hypothesized world: a latent vector per object plus an
assignment of each contact to an object. The belief holds a fixed-size set
of particles, the accumulated known free space, and the registered contact
regions. Measurement updates project particle latents onto the accumulated
constraints; particles whose required projection cannot be satisfied are
re-seeded from the prior a bounded number of times and then invalidated.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from . import shapemodel
from .projection import ConstraintSet, ProjectionConfig, constraint_check, project
from .scenesim import CollisionHypothesisSet, DepthView, Observation
from .shapemodel import DecoderSpec, LatentPrior, ObjectClassConfig
from .voxelgrid import (VoxelGrid, empty_grid, load, save, set_union,
                        transform_to_local, transform_to_scene, GridTransform)

RESEED_ATTEMPTS = 3


@dataclass(frozen=True)
class ObjectModel:
    """Everything the belief knows about one object a priori."""

    name: str
    spec: DecoderSpec
    transform: GridTransform         # local -> scene
    prior: LatentPrior


def object_model_from_view(name: str, spec: DecoderSpec, transform: GridTransform,
                           class_config: ObjectClassConfig, view: DepthView,
                           object_index: int) -> ObjectModel:
    """Build an object's prior from the scene depth view.

    The view is cropped into the object's local frame; occupied voxels are
    kept only where the view's segmentation attributes them to this object.
    """
    local_free = transform_to_local(view.known_free, transform, spec.dims)
    own = view.known_occupied.copy()
    own.values[view.owner != object_index] = 0.0
    local_occ = transform_to_local(own, transform, spec.dims)
    prior = shapemodel.prior_from_view(local_free, local_occ, class_config)
    return ObjectModel(name, spec, transform, prior)


@dataclass
class Particle:
    psis: list[NDArray[np.float64]]
    assignments: dict[int, tuple[int, ...]] = field(default_factory=dict)
    valid: bool = True
    rng: np.random.Generator = None


@dataclass(frozen=True)
class UpdateOptions:
    """Ablation switches for the measurement update."""

    ignore_prior: bool = False       # drop the prior loss term (alpha = 0)
    accept_failed: bool = False      # keep unsatisfied projections, never invalidate
    no_disambiguation: bool = False  # assign a contact to every feasible object


class Belief:
    """Fixed-size particle set plus the shared, growing constraint state."""

    def __init__(self, objects: list[ObjectModel], particles: list[Particle],
                 known_free: VoxelGrid, config: ProjectionConfig | None = None):
        if not objects:
            raise ValueError("belief needs at least one object")
        self.objects = list(objects)
        self.particles = list(particles)
        self.known_free = known_free
        self.chs_list: list[CollisionHypothesisSet] = []
        self.config = config or ProjectionConfig()

    @property
    def n_particles(self) -> int:
        return len(self.particles)

    def valid_particles(self) -> list[Particle]:
        return [p for p in self.particles if p.valid]

    def local_known_free(self, obj_index: int) -> VoxelGrid:
        obj = self.objects[obj_index]
        return transform_to_local(self.known_free, obj.transform, obj.spec.dims)

    def local_chs(self, obj_index: int, chs_id: int) -> VoxelGrid:
        """Contact region in the object's frame; may crop to empty."""
        obj = self.objects[obj_index]
        return transform_to_local(self.chs_list[chs_id].region, obj.transform,
                                  obj.spec.dims)


def init_belief(objects: list[ObjectModel], scene_view: DepthView, n: int,
                seed_seq: np.random.SeedSequence,
                config: ProjectionConfig | None = None) -> Belief:
    """Draw n particles from the per-object priors. No projection happens
    here; the first update reconciles samples with the vision constraints."""
    if not objects:
        raise ValueError("no objects")
    if n < 1:
        raise ValueError("need at least one particle")
    particles = []
    for child in seed_seq.spawn(n):
        rng = np.random.default_rng(child)
        psis = [shapemodel.sample_latent(obj.prior, rng) for obj in objects]
        particles.append(Particle(psis=psis, rng=rng))
    return Belief(objects, particles, scene_view.known_free.copy(), config)


def _effective_config(belief: Belief, opts: UpdateOptions) -> ProjectionConfig:
    if opts.ignore_prior and belief.config.alpha != 0.0:
        return dataclasses.replace(belief.config, alpha=0.0)
    return belief.config


def _constraints_for(belief: Belief, particle: Particle, obj_index: int,
                     extra: VoxelGrid | None = None) -> ConstraintSet:
    """Accumulated constraint set of one object under this particle's
    assignments, optionally with one additional contact region."""
    regions = []
    for chs_id, owners in particle.assignments.items():
        if obj_index in owners:
            local = belief.local_chs(obj_index, chs_id)
            if local.count_occupied():
                regions.append(local)
    if extra is not None:
        regions.append(extra)
    return ConstraintSet(belief.local_known_free(obj_index), tuple(regions))


def assign_contact(belief: Belief, particle: Particle,
                   chs: CollisionHypothesisSet, opts: UpdateOptions | None = None):
    """Pick which object explains a new contact region, for one particle.

    Candidates must pass two filters: the region transformed into the
    object's frame is non-empty, and a trial projection of the object's
    current latent with the region added succeeds. Returns a uniformly
    random (object index, projected latent) among candidates, or None.
    """
    opts = opts or UpdateOptions()
    cfg = _effective_config(belief, opts)
    candidates = _contact_candidates(belief, particle, chs, opts, cfg)
    if not candidates:
        return None
    pick = int(particle.rng.integers(len(candidates)))
    return candidates[pick]


def _contact_candidates(belief, particle, chs, opts, cfg):
    """(object index, trial latent) for every object passing the filters."""
    out = []
    for j, obj in enumerate(belief.objects):
        local = transform_to_local(chs.region, obj.transform, obj.spec.dims)
        if local.count_occupied() == 0:
            continue
        constraints = _constraints_for(belief, particle, j, extra=local)
        result = project(obj.spec, particle.psis[j], obj.prior, constraints, cfg)
        if result.satisfied or opts.accept_failed:
            out.append((j, result.psi))
    return out


def _reseed_objects(belief, particle, chs):
    """Objects eligible for a fresh prior draw when a contact has no
    feasible explanation: those whose region the contact intersects."""
    out = []
    for j, obj in enumerate(belief.objects):
        local = transform_to_local(chs.region, obj.transform, obj.spec.dims)
        if local.count_occupied():
            out.append(j)
    return out


def _apply_contact(belief, particle, chs_id, chs, opts, cfg):
    for attempt in range(RESEED_ATTEMPTS + 1):
        candidates = _contact_candidates(belief, particle, chs, opts, cfg)
        if candidates:
            if opts.no_disambiguation:
                chosen = candidates
            else:
                pick = int(particle.rng.integers(len(candidates)))
                chosen = [candidates[pick]]
            for j, psi in chosen:
                particle.psis[j] = psi
            particle.assignments[chs_id] = tuple(j for j, _ in chosen)
            return
        if opts.accept_failed or attempt == RESEED_ATTEMPTS:
            # accept_failed never re-seeds; an empty candidate list there
            # means no object's region even intersects the contact
            break
        for j in _reseed_objects(belief, particle, chs):
            particle.psis[j] = shapemodel.sample_latent(
                belief.objects[j].prior, particle.rng)
    particle.valid = False


def _apply_free_space(belief, particle, opts, cfg):
    """Re-project any object that violates the accumulated constraints."""
    for j, obj in enumerate(belief.objects):
        constraints = _constraints_for(belief, particle, j)
        if constraint_check(obj.spec, particle.psis[j], constraints, cfg):
            continue
        result = project(obj.spec, particle.psis[j], obj.prior, constraints, cfg)
        if result.satisfied or opts.accept_failed:
            particle.psis[j] = result.psi
            continue
        for _ in range(RESEED_ATTEMPTS):
            fresh = shapemodel.sample_latent(obj.prior, particle.rng)
            result = project(obj.spec, fresh, obj.prior, constraints, cfg)
            if result.satisfied:
                particle.psis[j] = result.psi
                break
        else:
            particle.psis[j] = result.psi
            particle.valid = False
            return


def _update_particle(belief, particle, chs_id, opts, cfg):
    if not particle.valid:
        return
    if chs_id is not None:
        _apply_contact(belief, particle, chs_id, belief.chs_list[chs_id], opts, cfg)
        if not particle.valid:
            return
    _apply_free_space(belief, particle, opts, cfg)


def worker_count() -> int:
    raw = os.environ.get("CLASP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def update_belief(belief: Belief, obs: Observation,
                  opts: UpdateOptions | None = None) -> Belief:
    """One measurement update: grow free space, then per particle explain
    any new contact and repair free-space violations by projection.

    Per-particle work is independent (each particle owns its RNG stream),
    so it runs on a thread pool sized by the CLASP_THREADS variable.
    """
    opts = opts or UpdateOptions()
    if obs.swept_free.dims != belief.known_free.dims:
        raise ValueError("observation grid does not match belief grid")
    belief.known_free = set_union(belief.known_free, obs.swept_free)
    chs_id = None
    if obs.chs is not None:
        belief.chs_list.append(obs.chs)
        chs_id = len(belief.chs_list) - 1

    cfg = _effective_config(belief, opts)
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda p: _update_particle(belief, p, chs_id, opts, cfg),
                          belief.particles))
    else:
        for particle in belief.particles:
            _update_particle(belief, particle, chs_id, opts, cfg)
    return belief


def decode_particle(belief: Belief, particle: Particle) -> VoxelGrid:
    """Union of the particle's thresholded per-object decodes, scene frame."""
    if not particle.valid:
        raise ValueError("cannot decode an invalid particle")
    dims = belief.known_free.dims
    out = empty_grid(dims, belief.known_free.voxel_size)
    for obj, psi in zip(belief.objects, particle.psis):
        local = shapemodel.decode(obj.spec, psi,
                                  threshold=belief.config.occupancy_threshold)
        placed = transform_to_scene(local, obj.transform, dims)
        out.values = np.maximum(out.values, placed.values)
    return out


def occupancy_frequency(belief: Belief) -> NDArray[np.float64]:
    """Per-voxel fraction of valid particles whose decode occupies it."""
    total = np.zeros(belief.known_free.dims, dtype=np.float64)
    n = 0
    for particle in belief.particles:
        if not particle.valid:
            continue
        total += decode_particle(belief, particle).occupied_mask()
        n += 1
    return total / n if n else total


def save_belief(belief: Belief, out_dir) -> None:
    """Snapshot: latent table (one particle per row), validity flags, and
    the shared constraint grids in the voxel grid binary format."""
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    rows = np.stack([np.concatenate(p.psis) for p in belief.particles])
    np.savetxt(path / "latents.txt", rows, fmt="%.17g")
    np.savetxt(path / "valid.txt",
               np.array([int(p.valid) for p in belief.particles]), fmt="%d")
    save(belief.known_free, path / "known_free.bin")
    for i, chs in enumerate(belief.chs_list):
        save(chs.region, path / f"chs_{i:03d}.bin")


def load_belief(snap_dir, objects: list[ObjectModel],
                config: ProjectionConfig | None = None) -> Belief:
    """Rebuild a belief from a snapshot. Contact assignments are not part
    of the snapshot format, so the result carries constraint grids and
    latents only (enough for decoding and metrics)."""
    path = Path(snap_dir)
    rows = np.atleast_2d(np.loadtxt(path / "latents.txt", dtype=np.float64))
    flags = np.atleast_1d(np.loadtxt(path / "valid.txt", dtype=np.int64))
    sizes = [obj.spec.latent_size for obj in objects]
    if rows.shape[1] != sum(sizes):
        raise ValueError("latent table does not match the object models")
    particles = []
    for row, flag in zip(rows, flags):
        psis, at = [], 0
        for size in sizes:
            psis.append(row[at:at + size].copy())
            at += size
        particles.append(Particle(psis=psis, valid=bool(flag),
                                  rng=np.random.default_rng(0)))
    belief = Belief(objects, particles, load(path / "known_free.bin"), config)
    for grid_path in sorted(path.glob("chs_*.bin")):
        belief.chs_list.append(CollisionHypothesisSet(load(grid_path)))
    return belief
