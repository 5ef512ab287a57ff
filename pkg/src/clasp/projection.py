"""Projection of latent shapes onto contact and free-space constraints.

Given a latent psi, an object's constraint set says: decoded occupancy must
stay at or below a threshold delta on every known-free voxel, and every
contact region assigned to the object must contain at least one voxel of
the thresholded decode. Projection minimizes

    L = l_free + l_occ + l_prior

with Adam until the (hard) constraint check passes, the loss stops moving,
or the iteration budget runs out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import shapemodel
from .shapemodel import DecoderSpec, LatentPrior
from .voxelgrid import VoxelGrid


@dataclass(frozen=True)
class ConstraintSet:
    """Known free space plus assigned contact regions, in the object frame."""

    known_free: VoxelGrid
    chs_regions: tuple[VoxelGrid, ...] = ()

    def __post_init__(self):
        free = self.known_free.occupied_mask()
        for i, region in enumerate(self.chs_regions):
            if region.count_occupied() == 0:
                raise ValueError(f"contact region {i} is empty")
            if np.any(region.occupied_mask() & free):
                raise ValueError(f"contact region {i} overlaps known free space")


@dataclass(frozen=True)
class ProjectionConfig:
    delta: float = 0.4
    alpha: float = 0.01
    learning_rate: float = 0.01
    max_iters: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    stagnation_window: int = 10
    stagnation_tol: float = 1e-6
    occupancy_threshold: float = 0.5
    # Adam runs on coordinates rescaled by the prior stddev, so each step
    # moves a latent coordinate by a fixed fraction of its uncertainty.
    # Coordinates the view already pins barely move; uncertain ones can
    # cross their whole plausible range within the iteration budget.
    step_scale: float = 16.0

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.learning_rate <= 0 or self.max_iters < 0:
            raise ValueError("bad optimizer settings")
        if not (0.0 < self.occupancy_threshold < 1.0):
            raise ValueError("occupancy threshold must lie in (0, 1)")


class ProjectionStatus(enum.Enum):
    SATISFIED = "satisfied"
    ITERATION_LIMIT = "iteration_limit"
    STAGNATED = "stagnated"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class ProjectionResult:
    psi: NDArray[np.float64]
    status: ProjectionStatus
    iterations: int
    loss_free: float
    loss_occ: float
    loss_prior: float

    @property
    def satisfied(self) -> bool:
        return self.status is ProjectionStatus.SATISFIED

    @property
    def loss_total(self) -> float:
        return self.loss_free + self.loss_occ + self.loss_prior


class _Compiled:
    """Constraint grids flattened to index lists once per projection call."""

    def __init__(self, constraints: ConstraintSet):
        self.free_mask = constraints.known_free.occupied_mask()
        self.free_any = bool(self.free_mask.any())
        self.chs_points = [r.occupied_indices() for r in constraints.chs_regions]


def _candidate_free_points(spec: DecoderSpec, psi, compiled: _Compiled):
    """Free voxels that could possibly exceed delta for the current psi.

    A voxel only reaches soft value > delta when it lies within a small
    margin of some box, so it suffices to scan the free mask inside each
    box's padded bounding range. Exact: everything outside decodes below
    any delta >= sigmoid(-margin * sharpness) bound used here.
    """
    boxes = np.asarray(psi, dtype=np.float64).reshape(spec.n_boxes, 6)
    dims = spec.dims
    mask = compiled.free_mask
    pieces = []
    # sigmoid(k (e - d)) > 0.25 needs d < e + 1.1/k; pad by that plus the
    # half-voxel center offset, rounded out one more for safety.
    for c, s in zip(boxes[:, :3], boxes[:, 3:]):
        e = np.exp(s)
        pad = e + 1.1 / spec.sharpness + 1.0
        lo = np.maximum(np.floor(c - pad).astype(int), 0)
        hi = np.minimum(np.ceil(c + pad).astype(int) + 1, dims)
        if np.any(hi <= lo):
            continue
        sub = mask[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        if not sub.any():
            continue
        pts = np.argwhere(sub) + lo
        pieces.append(pts)
    if not pieces:
        return np.empty((0, 3), dtype=np.int64)
    pts = np.concatenate(pieces, axis=0)
    if len(pieces) > 1:
        flat = pts[:, 0] + dims[0] * (pts[:, 1] + dims[1] * pts[:, 2])
        _, keep = np.unique(flat, return_index=True)
        pts = pts[keep]
    return pts


def loss_free(spec, psi, known_free: VoxelGrid, delta: float = 0.4) -> float:
    """Sum of max(W(v) - delta, 0) over known-free voxels."""
    pts = known_free.occupied_indices()
    if len(pts) == 0:
        return 0.0
    w = shapemodel.soft_values_at(spec, psi, pts)
    return float(np.maximum(w - delta, 0.0).sum())


def loss_occ(spec, psi, chs_regions) -> float:
    """Sum over contact regions of (1 - max decoded value inside)."""
    total = 0.0
    for region in chs_regions:
        pts = region.occupied_indices()
        w = shapemodel.soft_values_at(spec, psi, pts)
        total += 1.0 - float(w.max())
    return total


def loss_prior(prior: LatentPrior, psi, alpha: float = 0.01) -> float:
    """Negative log prior density, weighted by alpha."""
    return -alpha * shapemodel.log_prob(prior, psi)


def loss_all_and_grad(spec, psi, compiled: _Compiled, prior: LatentPrior,
                      config: ProjectionConfig):
    """Total loss, its gradient w.r.t. psi, and the (free, occ, prior) split."""
    psi = np.asarray(psi, dtype=np.float64)
    grad = np.zeros_like(psi)

    l_free = 0.0
    if compiled.free_any:
        if isinstance(spec, DecoderSpec):
            pts = _candidate_free_points(spec, psi, compiled)
        else:
            pts = np.argwhere(compiled.free_mask)
        if len(pts):
            w, jac = shapemodel.soft_values_and_jacobian_at(spec, psi, pts)
            over = w > config.delta
            if over.any():
                l_free = float((w[over] - config.delta).sum())
                grad += jac[over].sum(axis=0)

    l_occ = 0.0
    for pts in compiled.chs_points:
        w, jac = shapemodel.soft_values_and_jacobian_at(spec, psi, pts)
        best = int(np.argmax(w))
        l_occ += 1.0 - float(w[best])
        grad -= jac[best]

    l_prior = 0.0
    if config.alpha > 0.0:
        l_prior = -config.alpha * shapemodel.log_prob(prior, psi)
        grad += -config.alpha * shapemodel.log_prob_gradient(prior, psi)

    return l_free + l_occ + l_prior, grad, (l_free, l_occ, l_prior)


def constraint_check(spec, psi, constraints: ConstraintSet,
                     config: ProjectionConfig | None = None) -> bool:
    """Hard feasibility: free space soft-clear and every contact explained.

    (a) every known-free voxel decodes to at most delta;
    (b) every assigned contact region contains at least one voxel of the
        decode thresholded at the occupancy threshold.
    """
    cfg = config or ProjectionConfig()
    compiled = constraints if isinstance(constraints, _Compiled) else _Compiled(constraints)
    return _check_compiled(spec, psi, compiled, cfg)


def _check_compiled(spec, psi, compiled: _Compiled, cfg: ProjectionConfig) -> bool:
    for pts in compiled.chs_points:
        w = shapemodel.soft_values_at(spec, psi, pts)
        if not np.any(w > cfg.occupancy_threshold):
            return False
    if compiled.free_any:
        if isinstance(spec, DecoderSpec):
            pts = _candidate_free_points(spec, psi, compiled)
        else:
            pts = np.argwhere(compiled.free_mask)
        if len(pts):
            w = shapemodel.soft_values_at(spec, psi, pts)
            if np.any(w > cfg.delta):
                return False
    return True


def _step_scale(prior: LatentPrior, config: ProjectionConfig) -> NDArray[np.float64]:
    return config.step_scale * np.asarray(prior.stddev, dtype=np.float64)


def project(spec, psi0, prior: LatentPrior, constraints: ConstraintSet,
            config: ProjectionConfig | None = None) -> ProjectionResult:
    """Gradient-project psi0 onto the constraint set.

    Runs Adam on the total loss, checking the hard constraints after every
    step and returning at the first satisfying iterate. Failure modes:
    iteration budget exhausted, loss stagnant over the detection window
    while constraints are still unmet, or a non-finite loss. Deterministic
    for identical inputs.
    """
    cfg = config or ProjectionConfig()
    psi = np.asarray(psi0, dtype=np.float64).copy()
    compiled = _Compiled(constraints)

    def finish(status, iters, current):
        l_free, l_occ, l_prior = _loss_split(spec, current, compiled, prior, cfg)
        return ProjectionResult(current, status, iters, l_free, l_occ, l_prior)

    if _check_compiled(spec, psi, compiled, cfg):
        return finish(ProjectionStatus.SATISFIED, 0, psi)

    scale = _step_scale(prior, cfg)
    m = np.zeros_like(psi)
    v = np.zeros_like(psi)
    history: list[float] = []

    for t in range(1, cfg.max_iters + 1):
        loss, grad, _ = loss_all_and_grad(spec, psi, compiled, prior, cfg)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            return finish(ProjectionStatus.DIVERGED, t - 1, psi)
        history.append(loss)
        if len(history) > cfg.stagnation_window:
            if abs(history[-1] - history[-1 - cfg.stagnation_window]) < cfg.stagnation_tol:
                return finish(ProjectionStatus.STAGNATED, t - 1, psi)

        g = grad * scale
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
        psi = psi - cfg.learning_rate * scale * m_hat / (np.sqrt(v_hat) + cfg.eps)

        if _check_compiled(spec, psi, compiled, cfg):
            return finish(ProjectionStatus.SATISFIED, t, psi)

    return finish(ProjectionStatus.ITERATION_LIMIT, cfg.max_iters, psi)


def _loss_split(spec, psi, compiled, prior, cfg):
    _, _, split = loss_all_and_grad(spec, psi, compiled, prior, cfg)
    return split
