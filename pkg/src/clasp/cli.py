"""Command-line entry points: scenario runs, method comparison, dataset
generation, and stats recomputation.

A scenario is a YAML document describing the voxel grid, the ground-truth
objects (with their latent regions and class configs), per-step candidate
probe motions, and optional evaluation exclusions. The runner renders the
depth view, initializes the chosen method, loops observation steps
(informative-probe selection, sweep, belief or baseline update), and emits
results.csv, stats.csv, and a replayable manifest.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import copy
import dataclasses
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__, shapemodel
from .baselines import (direct_edit, draw_scene_sample, rejection_sample,
                        soft_rejection_sample, combined_input_prior)
from .belief import (Belief, ObjectModel, UpdateOptions, decode_particle,
                     init_belief, object_model_from_view, update_belief)
from .evalmetrics import (ResultRow, StatsRow, masked_chamfer, read_results,
                          stats_from_results, write_manifest, write_results,
                          write_stats)
from .projection import ProjectionConfig
from .scenesim import (DepthView, Observation, ProbeMotion, Scene, SceneObject,
                       render_depth_view, select_informative_probe, sweep_probe)
from .shapemodel import AuxBoxRegion, DecoderSpec, ObjectClassConfig
from .voxelgrid import (GridTransform, VoxelGrid, empty_grid, rasterize_boxes,
                        save, set_union, transform_to_local)

METHODS = ("clasp", "clasp-ignore-prior", "clasp-accept-failed",
           "clasp-no-disambiguation", "rejection", "soft-rejection",
           "direct-edit", "combined-input-prior")
PROFILES = ("paper", "test")

DATASET_DIMS = (64, 64, 64)
DATASET_EXTENTS = (2, 41)        # full box extents, inclusive
DATASET_TRANSLATION = (-10, 10)  # augmentation offsets, inclusive


class ScenarioError(Exception):
    """A problem with the run configuration (not the run itself)."""


# ---------------------------------------------------------------------------
# scenario loading


def load_scenario(name_or_path: str, profile: str = "paper") -> dict:
    """Load a scenario config from a YAML path or a bundled scenario name."""
    path = Path(name_or_path)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if not path.is_file():
            raise ScenarioError(f"scenario file not found: {path}")
        text = path.read_text()
    else:
        if profile not in PROFILES:
            raise ScenarioError(f"unknown profile {profile!r}")
        root = resources.files("clasp") / "scenarios" / profile
        res = root / f"{name_or_path}.yaml"
        if not res.is_file():
            names = sorted(e.name[:-5] for e in root.iterdir()
                           if e.name.endswith(".yaml"))
            raise ScenarioError(
                f"unknown scenario {name_or_path!r}; bundled ({profile} "
                f"profile): {', '.join(names)}")
        text = res.read_text()
    try:
        config = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse scenario YAML: {exc}")
    if not isinstance(config, dict):
        raise ScenarioError("scenario config must be a mapping")
    return config


def apply_overrides(config: dict, overrides) -> dict:
    """Apply KEY=VALUE overrides with dotted keys; values parse as YAML."""
    out = copy.deepcopy(config)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ScenarioError(f"override must look like KEY=VALUE, got {item!r}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ScenarioError(f"cannot parse override value in {item!r}")
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = _descend(node, part, key)
        leaf = parts[-1]
        if isinstance(node, list):
            node[_index(leaf, key, len(node))] = value
        elif isinstance(node, dict):
            node[leaf] = value
        else:
            raise ScenarioError(f"override key {key!r} descends into a scalar")
    return out


def _index(part: str, key: str, length: int) -> int:
    try:
        i = int(part)
    except ValueError:
        raise ScenarioError(f"override key {key!r} indexes a list with {part!r}")
    if not -length <= i < length:
        raise ScenarioError(f"override key {key!r} is out of range")
    return i


def _descend(node, part: str, key: str):
    if isinstance(node, list):
        return node[_index(part, key, len(node))]
    if isinstance(node, dict):
        return node.setdefault(part, {})
    raise ScenarioError(f"override key {key!r} descends into a scalar")


# ---------------------------------------------------------------------------
# scenario building


@dataclass(frozen=True)
class BuiltScenario:
    name: str
    scene: Scene
    projection: ProjectionConfig
    noise_std_m: float
    # per observation step, the candidate probe sweeps
    observations: tuple[tuple[ProbeMotion, ...], ...]
    eval_exclude: VoxelGrid | None


def _need(mapping, key: str, ctx: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(f"missing config key {ctx}{key}")
    return mapping[key]


def _int3(value, ctx: str):
    try:
        out = tuple(int(v) for v in value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{ctx} must be three integers")
    if len(out) != 3:
        raise ScenarioError(f"{ctx} must be three integers")
    return out


def build_from_config(config: dict) -> BuiltScenario:
    name = str(config.get("name", "scenario"))
    grid = _need(config, "grid", "")
    dims = _int3(_need(grid, "dims", "grid."), "grid.dims")
    if any(d < 1 for d in dims):
        raise ScenarioError("grid.dims must be positive")
    voxel_size = float(grid.get("voxel_size", 0.01))
    noise_std_m = float(config.get("noise_std_m", 0.0))

    proj_cfg = config.get("projection") or {}
    try:
        projection = ProjectionConfig(**proj_cfg)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"projection: {exc}")

    objects = []
    for i, oc in enumerate(_need(config, "objects", "")):
        ctx = f"objects[{i}]."
        oname = str(oc.get("name", f"object{i}"))
        region = oc.get("region") or {"dims": list(dims), "shift": [0, 0, 0]}
        ldims = _int3(_need(region, "dims", ctx + "region."), ctx + "region.dims")
        shift = _int3(_need(region, "shift", ctx + "region."), ctx + "region.shift")
        if any(s < 0 or s + d > full for s, d, full in zip(shift, ldims, dims)):
            raise ScenarioError(f"{ctx}region does not fit inside the scene grid")
        aux = tuple(AuxBoxRegion(lo=_int3(_need(r, "lo", ctx + "aux_regions."),
                                          ctx + "aux_regions.lo"),
                                 hi=_int3(_need(r, "hi", ctx + "aux_regions."),
                                          ctx + "aux_regions.hi"))
                    for r in oc.get("aux_regions") or ())
        try:
            class_config = ObjectClassConfig(
                n_boxes=int(oc.get("n_boxes", 1)), aux_regions=aux,
                depth_slack_vox=float(oc.get("depth_slack_vox", 0.0)))
        except ValueError as exc:
            raise ScenarioError(f"{ctx}{exc}")

        mask = np.zeros(ldims, dtype=bool)
        for b in _need(oc, "truth", ctx):
            lo = np.asarray(_int3(_need(b, "lo", ctx + "truth."), ctx + "truth.lo"))
            hi = np.asarray(_int3(_need(b, "hi", ctx + "truth."), ctx + "truth.hi"))
            if np.any(lo >= hi):
                raise ScenarioError(f"{ctx}truth box has non-positive extent")
            s = lo - np.asarray(shift)
            e = hi - np.asarray(shift)
            if np.any(s < 0) or np.any(e > np.asarray(ldims)):
                raise ScenarioError(f"{ctx}truth box leaves the object region")
            mask[s[0]:e[0], s[1]:e[1], s[2]:e[2]] = True
        shape = VoxelGrid(mask.astype(np.float64), voxel_size)
        try:
            objects.append(SceneObject(oname, shape, GridTransform(shift),
                                       class_config))
        except ValueError as exc:
            raise ScenarioError(f"{ctx}{exc}")

    try:
        scene = Scene(dims, voxel_size, tuple(objects))
    except ValueError as exc:
        raise ScenarioError(str(exc))

    steps = []
    for k, ob in enumerate(config.get("observations") or ()):
        candidates = []
        for j, c in enumerate(ob.get("candidates") or ()):
            ctx = f"observations[{k}].candidates[{j}]."
            stencil = _int3(_need(c, "stencil", ctx), ctx + "stencil")
            start = _int3(_need(c, "start", ctx), ctx + "start")
            stop = _int3(_need(c, "stop", ctx), ctx + "stop")
            if any(d < 1 for d in stencil):
                raise ScenarioError(f"{ctx}stencil must be positive")
            try:
                motion = ProbeMotion(np.ones(stencil, dtype=bool),
                                     _line_waypoints(start, stop))
            except ValueError as exc:
                raise ScenarioError(f"{ctx}{exc}")
            candidates.append(motion)
        if not candidates:
            raise ScenarioError(f"observations[{k}] has no candidates")
        steps.append(tuple(candidates))

    exclude = None
    boxes = config.get("eval_exclude") or ()
    if boxes:
        mask = np.zeros(dims, dtype=bool)
        for b in boxes:
            lo = np.asarray(_int3(_need(b, "lo", "eval_exclude."), "eval_exclude.lo"))
            hi = np.asarray(_int3(_need(b, "hi", "eval_exclude."), "eval_exclude.hi"))
            lo = np.clip(lo, 0, dims)
            hi = np.clip(hi, 0, dims)
            mask[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = True
        exclude = VoxelGrid(mask.astype(np.float64), voxel_size)

    return BuiltScenario(name, scene, projection, noise_std_m,
                         tuple(steps), exclude)


def _line_waypoints(start, stop):
    """Integer waypoints along the straight segment, one Chebyshev step at
    a time (so every axis moves at most one voxel per step)."""
    start = np.asarray(start, dtype=np.int64)
    stop = np.asarray(stop, dtype=np.int64)
    n = int(np.max(np.abs(stop - start)))
    if n == 0:
        return start[None, :]
    t = np.arange(n + 1, dtype=np.float64)[:, None] / n
    return np.rint(start + (stop - start) * t).astype(np.int64)


# ---------------------------------------------------------------------------
# runner


@dataclass(frozen=True)
class RunSpec:
    scenario: str                 # bundled name or YAML path
    method: str = "clasp"
    particles: int = 100
    steps: int | None = None      # None: all configured observations
    seed: int = 0
    profile: str = "paper"
    overrides: tuple[str, ...] = ()


@dataclass
class RunArtifacts:
    spec: RunSpec
    config: dict
    built: BuiltScenario
    view: DepthView
    models: list[ObjectModel]
    truth: VoxelGrid
    rows: list[ResultRow]
    stats: list[StatsRow]
    observations: list[Observation]
    belief: Belief | None

    def manifest(self) -> dict:
        return {
            "scenario": self.spec.scenario,
            "method": self.spec.method,
            "particles": self.spec.particles,
            "steps": self.spec.steps,
            "seed": self.spec.seed,
            "profile": self.spec.profile,
            "overrides": list(self.spec.overrides),
            "versions": {"clasp": __version__, "numpy": np.__version__},
            "config": self.config,
        }


def run_spec(spec: RunSpec, config: dict | None = None) -> RunArtifacts:
    if config is None:
        config = apply_overrides(load_scenario(spec.scenario, spec.profile),
                                 spec.overrides)
    built = build_from_config(config)
    if spec.method not in METHODS:
        raise ScenarioError(f"unknown method {spec.method!r}; "
                            f"choose from: {', '.join(METHODS)}")
    if spec.particles < 1:
        raise ScenarioError("particles must be >= 1")
    n_steps = len(built.observations) if spec.steps is None else spec.steps
    if n_steps < 0:
        raise ScenarioError("steps must be >= 0")
    if n_steps > len(built.observations):
        raise ScenarioError(
            f"scenario {built.name!r} defines only "
            f"{len(built.observations)} observations, {n_steps} requested")

    # one root per run: independent streams for sensing, init, and steps
    noise_ss, init_ss, step_ss = np.random.SeedSequence(spec.seed).spawn(3)
    if built.noise_std_m > 0.0:
        view = render_depth_view(built.scene, np.random.default_rng(noise_ss),
                                 built.noise_std_m)
    else:
        view = render_depth_view(built.scene)

    voxel_size = built.scene.voxel_size
    models = []
    for i, obj in enumerate(built.scene.objects):
        dec = DecoderSpec(dims=obj.shape.dims,
                          n_boxes=obj.class_config.n_boxes,
                          voxel_size=voxel_size)
        models.append(object_model_from_view(obj.name, dec, obj.transform,
                                             obj.class_config, view, i))
    truth = built.scene.occupancy()

    if spec.method.startswith("clasp"):
        rows, observations, belief = _run_clasp(
            spec, built, view, models, truth, init_ss, step_ss, n_steps)
    else:
        rows, observations = _run_baseline(
            spec, built, view, models, truth, init_ss, step_ss, n_steps)
        belief = None
    stats = stats_from_results(rows)
    return RunArtifacts(spec, config, built, view, models, truth, rows, stats,
                        observations, belief)


def _decode_all(belief: Belief) -> list[VoxelGrid | None]:
    return [decode_particle(belief, p) if p.valid else None
            for p in belief.particles]


def _run_clasp(spec, built, view, models, truth, init_ss, step_ss, n_steps):
    opts = UpdateOptions(
        ignore_prior=spec.method == "clasp-ignore-prior",
        accept_failed=spec.method == "clasp-accept-failed",
        no_disambiguation=spec.method == "clasp-no-disambiguation")
    belief = init_belief(models, view, spec.particles, init_ss, built.projection)
    shapes = _decode_all(belief)
    flags = [p.valid for p in belief.particles]
    rows = _shape_rows(spec, built, 0, shapes, flags, truth)
    observations = []
    for k in range(n_steps):
        freq = _shape_frequency(shapes, built.scene.dims)
        idx = select_informative_probe(built.observations[k], freq,
                                       built.scene.dims)
        obs = sweep_probe(built.scene, built.observations[k][idx],
                          belief.known_free)
        observations.append(obs)
        update_belief(belief, obs, opts)
        shapes = _decode_all(belief)
        flags = [p.valid for p in belief.particles]
        rows += _shape_rows(spec, built, k + 1, shapes, flags, truth)
    return rows, observations, belief


def _shape_rows(spec, built, step, shapes, flags, truth):
    rows = []
    for pid, (shape, ok) in enumerate(zip(shapes, flags)):
        cd = masked_chamfer(shape, truth, built.eval_exclude) \
            if ok and shape is not None else None
        if cd is not None:
            # round to the precision results.csv keeps, so stats recomputed
            # from the file match the ones computed in memory byte for byte
            cd = float(f"{cd:.9g}")
        rows.append(ResultRow(built.name, spec.method, spec.seed, step, pid,
                              ok, cd))
    return rows


def _shape_frequency(shapes, dims):
    """Per-voxel fraction of the given (non-None) shapes occupying it."""
    total = np.zeros(dims, dtype=np.float64)
    n = 0
    for shape in shapes:
        if shape is not None:
            total += shape.occupied_mask()
            n += 1
    return total / n if n else total


def _augmented_models(built, view, models, owner, robot_free, contact_union):
    """Per object, refit the prior to the vision view merged with the robot's
    accumulated free space and its (segmented) contact voxels."""
    out = []
    for i, (obj, model) in enumerate(zip(built.scene.objects, models)):
        own_occ = view.known_occupied.copy()
        own_occ.values[view.owner != i] = 0.0
        own_contact = contact_union.copy()
        own_contact.values[owner != i] = 0.0
        ldims = model.spec.dims
        prior = combined_input_prior(
            obj.class_config,
            transform_to_local(view.known_free, model.transform, ldims),
            transform_to_local(own_occ, model.transform, ldims),
            transform_to_local(robot_free, model.transform, ldims),
            transform_to_local(own_contact, model.transform, ldims))
        out.append(dataclasses.replace(model, prior=prior))
    return out


def _run_baseline(spec, built, view, models, truth, init_ss, step_ss, n_steps):
    dims = built.scene.dims
    voxel_size = built.scene.voxel_size
    cfg = built.projection
    n = spec.particles
    owner = built.scene.owner()

    robot_free = empty_grid(dims, voxel_size)
    contact_union = empty_grid(dims, voxel_size)
    chs_grids: list[VoxelGrid] = []

    def known_free_all():
        return set_union(view.known_free, robot_free)

    def draw_step(rng):
        """Returns (shapes, valid flags, shapes the belief displays)."""
        free = known_free_all()
        if spec.method == "rejection":
            samples = rejection_sample(models, free, chs_grids, n, rng, cfg)
            shapes = [s.shape for s in samples]
            flags = [s.accepted for s in samples]
            return shapes, flags, [sh for sh, ok in zip(shapes, flags) if ok]
        if spec.method == "soft-rejection":
            outcome = soft_rejection_sample(models, free, chs_grids, n, rng,
                                            contact_union, cfg)
            by_index = dict(zip(outcome.selected, outcome.shapes))
            shapes = [by_index.get(i) for i in range(n)]
            flags = [i in by_index for i in range(n)]
            return shapes, flags, list(outcome.shapes)
        # combined-input-prior: fresh draws from the refit prior, no rejection
        mods = _augmented_models(built, view, models, owner, robot_free,
                                 contact_union)
        shapes = [draw_scene_sample(mods, free, [], rng, cfg).shape
                  for _ in range(n)]
        return shapes, [True] * n, shapes

    rng0 = np.random.default_rng(init_ss)
    step_rngs = [np.random.default_rng(c) for c in step_ss.spawn(n_steps)] \
        if n_steps else []

    if spec.method == "direct-edit":
        base = [draw_scene_sample(models, view.known_free, [], rng0, cfg).shape
                for _ in range(n)]
        shapes, flags, display = base, [True] * n, base
    else:
        shapes, flags, display = draw_step(rng0)

    rows = _shape_rows(spec, built, 0, shapes, flags, truth)
    observations = []
    for k in range(n_steps):
        freq = _shape_frequency(display, dims)
        idx = select_informative_probe(built.observations[k], freq, dims)
        obs = sweep_probe(built.scene, built.observations[k][idx],
                          known_free_all())
        observations.append(obs)
        robot_free = set_union(robot_free, obs.swept_free)
        if obs.chs is not None:
            chs_grids.append(obs.chs.region)
            contact_union = set_union(contact_union, obs.true_contact)
        if spec.method == "direct-edit":
            free = known_free_all()
            shapes = [direct_edit(b, free, contact_union) for b in base]
            flags, display = [True] * n, shapes
        else:
            shapes, flags, display = draw_step(step_rngs[k])
        rows += _shape_rows(spec, built, k + 1, shapes, flags, truth)
    return rows, observations


def write_run_artifacts(artifacts: RunArtifacts, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results(out / "results.csv", artifacts.rows)
    write_stats(out / "stats.csv", artifacts.stats)
    write_manifest(out / "manifest.yaml", artifacts.manifest())


def run_from_manifest(manifest: dict) -> RunArtifacts:
    """Re-execute a run exactly as recorded by its manifest."""
    try:
        spec = RunSpec(scenario=manifest["scenario"],
                       method=manifest["method"],
                       particles=int(manifest["particles"]),
                       steps=manifest["steps"],
                       seed=int(manifest["seed"]),
                       profile=manifest.get("profile", "paper"),
                       overrides=tuple(manifest.get("overrides") or ()))
        config = manifest["config"]
    except KeyError as exc:
        raise ScenarioError(f"manifest is missing key {exc}")
    return run_spec(spec, config=config)


# ---------------------------------------------------------------------------
# dataset generation


def generate_dataset(kind: str, count: int, seed: int, out_dir) -> dict:
    """Write `count` axis-aligned box grids plus a parameter manifest.

    Extents are uniform over the configured voxel range; each box starts
    centered and is shifted by a uniform translation, clamped so it stays
    inside the grid.
    """
    if kind != "aab":
        raise ScenarioError(f"unknown dataset kind {kind!r}")
    if count < 1:
        raise ScenarioError("count must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    full = np.asarray(DATASET_DIMS)
    records = []
    for i in range(count):
        extents = rng.integers(DATASET_EXTENTS[0], DATASET_EXTENTS[1] + 1,
                               size=3)
        lo = (full - extents) // 2
        t = rng.integers(DATASET_TRANSLATION[0], DATASET_TRANSLATION[1] + 1,
                         size=3)
        t = np.clip(t, -lo, full - (lo + extents))
        lo = lo + t
        center = lo + extents / 2.0
        grid = rasterize_boxes(DATASET_DIMS, [(center, extents.astype(float))])
        fname = f"{kind}_{i:04d}.bin"
        save(grid, out / fname)
        records.append({"file": fname,
                        "extents": [int(v) for v in extents],
                        "translation": [int(v) for v in t],
                        "lo": [int(v) for v in lo]})
    manifest = {"kind": kind, "count": count, "seed": seed,
                "dims": list(DATASET_DIMS),
                "extent_range": list(DATASET_EXTENTS),
                "translation_range": list(DATASET_TRANSLATION),
                "shapes": records}
    write_manifest(out / "manifest.yaml", manifest)
    return manifest


# ---------------------------------------------------------------------------
# click commands


def _guarded(fn):
    try:
        fn()
    except ScenarioError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except Exception as exc:  # noqa: BLE001 - map everything else to exit 1
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(1)


@click.group()
@click.version_option(version=__version__, prog_name="clasp")
def main():
    """Contact-constrained shape belief experiments."""


_shared = [
    click.option("--scenario", required=True,
                 help="bundled scenario name or YAML path"),
    click.option("--particles", default=100, show_default=True, type=int),
    click.option("--steps", default=None, type=int,
                 help="observations to run (default: all configured)"),
    click.option("--out", "out_dir", default=".", show_default=True,
                 type=click.Path(file_okay=False)),
    click.option("--profile", default="paper", show_default=True,
                 type=click.Choice(PROFILES)),
    click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE",
                 help="config override, dotted keys (repeatable)"),
]


def _with_shared(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


@main.command()
@_with_shared
@click.option("--method", default="clasp", show_default=True,
              type=click.Choice(METHODS))
@click.option("--seed", default=0, show_default=True, type=int)
def run(scenario, particles, steps, out_dir, profile, overrides, method, seed):
    """Run one scenario with one method; write results, stats, manifest."""
    def go():
        spec = RunSpec(scenario, method, particles, steps, seed, profile,
                       tuple(overrides))
        write_run_artifacts(run_spec(spec), out_dir)
        click.echo(f"wrote {Path(out_dir) / 'results.csv'}")
    _guarded(go)


@main.command()
@_with_shared
@click.option("--method", "methods", multiple=True, type=click.Choice(METHODS),
              help="repeatable; default: all methods")
@click.option("--seed", "seeds", multiple=True, type=int,
              help="repeatable; default: 0")
def compare(scenario, particles, steps, out_dir, profile, overrides, methods,
            seeds):
    """Run several methods (and seeds) on one scenario; write combined CSVs."""
    def go():
        rows = []
        for method in methods or METHODS:
            for seed in seeds or (0,):
                spec = RunSpec(scenario, method, particles, steps, seed,
                               profile, tuple(overrides))
                rows += run_spec(spec).rows
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results(out / "results.csv", rows)
        write_stats(out / "stats.csv", stats_from_results(rows))
        click.echo(f"wrote {out / 'stats.csv'}")
    _guarded(go)


@main.command()
@click.option("--kind", default="aab", show_default=True,
              type=click.Choice(["aab"]))
@click.option("--count", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
def dataset(kind, count, seed, out_dir):
    """Generate a dataset of axis-aligned box shapes (64^3 binary grids)."""
    def go():
        generate_dataset(kind, count, seed, out_dir)
        click.echo(f"wrote {count} shapes to {out_dir}")
    _guarded(go)


@main.command("eval")
@click.argument("results_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="stats.csv", show_default=True,
              type=click.Path(dir_okay=False))
def eval_cmd(results_path, out_path):
    """Recompute a stats.csv from an existing results.csv."""
    def go():
        write_stats(out_path, stats_from_results(read_results(results_path)))
        click.echo(f"wrote {out_path}")
    _guarded(go)


if __name__ == "__main__":
    main()
