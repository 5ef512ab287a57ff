"""Tests for scenario loading, config overrides, scenario building, the
run pipeline, dataset generation, and the click commands."""

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from clasp.cli import (
    METHODS,
    RunSpec,
    ScenarioError,
    _line_waypoints,
    apply_overrides,
    build_from_config,
    generate_dataset,
    load_scenario,
    main,
    run_from_manifest,
    run_spec,
    write_run_artifacts,
)
from clasp.evalmetrics import read_manifest, read_results, read_stats
from clasp.voxelgrid import load


def tiny_config():
    # one box whose back face (high x) is hidden from the +x camera;
    # a single thin probe pushes in along -x and pins it
    return {
        "name": "tiny",
        "grid": {"dims": [16, 12, 12], "voxel_size": 0.01},
        "objects": [
            {"name": "box",
             "region": {"dims": [12, 12, 12], "shift": [0, 0, 0]},
             "truth": [{"lo": [3, 4, 4], "hi": [7, 8, 8]}]},
        ],
        "observations": [
            {"candidates": [
                {"stencil": [1, 1, 1], "start": [14, 5, 5], "stop": [4, 5, 5]},
            ]},
        ],
    }


def tiny_spec(method="clasp", particles=4, seed=0, steps=None):
    return RunSpec("inline", method=method, particles=particles, steps=steps,
                   seed=seed)


# ---------------------------------------------------------------------------
# scenario loading


def test_load_bundled_scenario_both_profiles():
    paper = load_scenario("deep-box", "paper")
    test = load_scenario("deep-box", "test")
    assert paper["name"] == test["name"] == "deep-box"
    assert paper["grid"]["dims"] != test["grid"]["dims"]


def test_load_scenario_from_path(tmp_path):
    path = tmp_path / "mine.yaml"
    path.write_text(yaml.safe_dump(tiny_config()))
    assert load_scenario(str(path))["name"] == "tiny"


def test_load_scenario_unknown_name_lists_bundled():
    with pytest.raises(ScenarioError, match="deep-box"):
        load_scenario("no-such-scenario")


def test_load_scenario_unknown_profile():
    with pytest.raises(ScenarioError, match="profile"):
        load_scenario("deep-box", "prod")


def test_load_scenario_missing_file(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        load_scenario(str(tmp_path / "absent.yaml"))


def test_load_scenario_bad_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("a: [1, 2\n")
    with pytest.raises(ScenarioError, match="parse"):
        load_scenario(str(path))


def test_load_scenario_non_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError, match="mapping"):
        load_scenario(str(path))


# ---------------------------------------------------------------------------
# overrides


def test_apply_overrides_dotted_keys_and_yaml_values():
    cfg = tiny_config()
    out = apply_overrides(cfg, ["grid.dims.0=48", "noise_std_m=0.002",
                                "name=renamed"])
    assert out["grid"]["dims"][0] == 48
    assert out["noise_std_m"] == 0.002
    assert out["name"] == "renamed"
    # the input config is untouched
    assert cfg["grid"]["dims"][0] == 16 and "noise_std_m" not in cfg


def test_apply_overrides_into_list_of_mappings():
    out = apply_overrides(tiny_config(),
                          ["objects.0.truth.0.hi=[8, 8, 8]"])
    assert out["objects"][0]["truth"][0]["hi"] == [8, 8, 8]


def test_apply_overrides_creates_missing_sections():
    out = apply_overrides(tiny_config(), ["projection.max_iters=7"])
    assert out["projection"] == {"max_iters": 7}


def test_apply_overrides_errors():
    with pytest.raises(ScenarioError, match="KEY=VALUE"):
        apply_overrides(tiny_config(), ["grid.dims.0"])
    with pytest.raises(ScenarioError, match="out of range"):
        apply_overrides(tiny_config(), ["grid.dims.7=1"])
    with pytest.raises(ScenarioError, match="indexes a list"):
        apply_overrides(tiny_config(), ["grid.dims.x=1"])
    with pytest.raises(ScenarioError, match="scalar"):
        apply_overrides(tiny_config(), ["name.deep=1"])


# ---------------------------------------------------------------------------
# building


def test_build_tiny_scenario():
    built = build_from_config(tiny_config())
    assert built.name == "tiny"
    assert built.scene.dims == (16, 12, 12)
    assert len(built.observations) == 1
    assert len(built.observations[0]) == 1
    assert built.eval_exclude is None
    assert built.noise_std_m == 0.0
    # truth mask landed where the config said
    occ = built.scene.occupancy().occupied_mask()
    assert occ.sum() == 4 * 4 * 4
    assert occ[3, 4, 4] and occ[6, 7, 7] and not occ[7, 4, 4]


def test_build_region_defaults_to_whole_grid():
    cfg = tiny_config()
    del cfg["objects"][0]["region"]
    built = build_from_config(cfg)
    assert built.scene.objects[0].shape.dims == (16, 12, 12)


def test_build_eval_exclude_clips_to_grid():
    cfg = tiny_config()
    cfg["eval_exclude"] = [{"lo": [-2, 0, 0], "hi": [2, 99, 99]}]
    built = build_from_config(cfg)
    mask = built.eval_exclude.occupied_mask()
    assert mask[:2].all() and not mask[2:].any()


def test_build_projection_overrides_and_errors():
    cfg = tiny_config()
    cfg["projection"] = {"max_iters": 7}
    assert build_from_config(cfg).projection.max_iters == 7
    cfg["projection"] = {"learning_rate": 0.0}
    with pytest.raises(ScenarioError, match="projection"):
        build_from_config(cfg)
    cfg["projection"] = {"no_such_knob": 1}
    with pytest.raises(ScenarioError, match="projection"):
        build_from_config(cfg)


def test_build_validation_errors():
    cfg = tiny_config()
    del cfg["grid"]
    with pytest.raises(ScenarioError, match="grid"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["grid"]["dims"] = [16, 12]
    with pytest.raises(ScenarioError, match="three integers"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["grid"]["dims"] = [0, 12, 12]
    with pytest.raises(ScenarioError, match="positive"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["objects"][0]["region"]["dims"] = [20, 4, 4]
    with pytest.raises(ScenarioError, match="does not fit"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["objects"][0]["truth"][0]["hi"] = [3, 8, 8]
    with pytest.raises(ScenarioError, match="non-positive"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["objects"][0]["truth"][0]["hi"] = [13, 8, 8]
    with pytest.raises(ScenarioError, match="leaves the object region"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["observations"].append({"candidates": []})
    with pytest.raises(ScenarioError, match="no candidates"):
        build_from_config(cfg)

    cfg = tiny_config()
    cfg["observations"][0]["candidates"][0]["stencil"] = [0, 1, 1]
    with pytest.raises(ScenarioError, match="stencil"):
        build_from_config(cfg)


def test_line_waypoints():
    pts = _line_waypoints((2, 3, 4), (2, 3, 4))
    assert pts.shape == (1, 3)

    pts = _line_waypoints((14, 5, 5), (4, 5, 5))
    np.testing.assert_array_equal(pts[:, 0], np.arange(14, 3, -1))
    assert (pts[:, 1:] == 5).all()

    pts = _line_waypoints((0, 0, 0), (5, 3, 1))
    np.testing.assert_array_equal(pts[0], [0, 0, 0])
    np.testing.assert_array_equal(pts[-1], [5, 3, 1])
    steps = np.abs(np.diff(pts, axis=0))
    assert steps.max() == 1       # one Chebyshev step at a time


# ---------------------------------------------------------------------------
# run pipeline


def test_run_spec_validation():
    cfg = tiny_config()
    with pytest.raises(ScenarioError, match="unknown method"):
        run_spec(tiny_spec(method="magic"), config=cfg)
    with pytest.raises(ScenarioError, match="particles"):
        run_spec(tiny_spec(particles=0), config=cfg)
    with pytest.raises(ScenarioError, match="steps must be"):
        run_spec(tiny_spec(steps=-1), config=cfg)
    with pytest.raises(ScenarioError, match="observations"):
        run_spec(tiny_spec(steps=5), config=cfg)


def test_run_rows_schema_and_stats():
    art = run_spec(tiny_spec(), config=tiny_config())
    n = art.spec.particles
    assert len(art.rows) == n * 2                    # step 0 plus one update
    for step in (0, 1):
        block = [r for r in art.rows if r.step == step]
        assert [r.particle_id for r in block] == list(range(n))
        assert all(r.scenario == "tiny" and r.method == "clasp" for r in block)
    for r in art.rows:
        assert r.valid == (r.cd_m is not None)
    assert [s.step for s in art.stats] == [0, 1]
    assert len(art.observations) == 1
    # the configured probe hits the box back face
    assert art.observations[0].chs is not None


def test_run_deterministic():
    a = run_spec(tiny_spec(), config=tiny_config())
    b = run_spec(tiny_spec(), config=tiny_config())
    assert a.rows == b.rows


def test_run_seeds_differ():
    a = run_spec(tiny_spec(seed=0), config=tiny_config())
    b = run_spec(tiny_spec(seed=1), config=tiny_config())
    assert a.rows != b.rows


def test_clasp_variants_identical_before_first_update():
    # the update options only matter once observations arrive
    base = None
    for method in ("clasp", "clasp-ignore-prior", "clasp-accept-failed",
                   "clasp-no-disambiguation"):
        art = run_spec(tiny_spec(method=method, steps=0),
                       config=tiny_config())
        step0 = [(r.particle_id, r.valid, r.cd_m) for r in art.rows]
        if base is None:
            base = step0
        else:
            assert step0 == base


def test_baseline_methods_run():
    for method in ("rejection", "soft-rejection", "direct-edit",
                   "combined-input-prior"):
        art = run_spec(tiny_spec(method=method, particles=3),
                       config=tiny_config())
        assert len(art.rows) == 6
        assert art.belief is None


def test_artifacts_and_manifest_replay(tmp_path):
    art = run_spec(tiny_spec(), config=tiny_config())
    first = tmp_path / "first"
    write_run_artifacts(art, first)
    assert read_results(first / "results.csv") == art.rows

    manifest = read_manifest(first / "manifest.yaml")
    assert manifest["method"] == "clasp" and manifest["particles"] == 4
    replay = run_from_manifest(manifest)
    second = tmp_path / "second"
    write_run_artifacts(replay, second)
    assert (first / "results.csv").read_bytes() == \
        (second / "results.csv").read_bytes()
    assert (first / "stats.csv").read_bytes() == \
        (second / "stats.csv").read_bytes()


# ---------------------------------------------------------------------------
# dataset generation


def test_generate_dataset_deterministic(tmp_path):
    m1 = generate_dataset("aab", 4, seed=7, out_dir=tmp_path / "a")
    m2 = generate_dataset("aab", 4, seed=7, out_dir=tmp_path / "b")
    assert m1["shapes"] == m2["shapes"]
    name = m1["shapes"][0]["file"]
    assert (tmp_path / "a" / name).read_bytes() == \
        (tmp_path / "b" / name).read_bytes()


def test_generate_dataset_ranges_and_grids(tmp_path):
    manifest = generate_dataset("aab", 30, seed=0, out_dir=tmp_path)
    assert manifest["count"] == 30 and len(manifest["shapes"]) == 30
    assert read_manifest(tmp_path / "manifest.yaml") == manifest
    for rec in manifest["shapes"]:
        ext = np.asarray(rec["extents"])
        lo = np.asarray(rec["lo"])
        assert ((2 <= ext) & (ext <= 41)).all()
        assert ((-10 <= np.asarray(rec["translation"]))
                & (np.asarray(rec["translation"]) <= 10)).all()
        assert (lo >= 0).all() and (lo + ext <= 64).all()
    # the saved grid matches its manifest record
    rec = manifest["shapes"][0]
    grid = load(tmp_path / rec["file"])
    idx = grid.occupied_indices()
    np.testing.assert_array_equal(idx.min(axis=0), rec["lo"])
    np.testing.assert_array_equal(
        idx.max(axis=0), np.asarray(rec["lo"]) + rec["extents"] - 1)
    assert len(idx) == int(np.prod(rec["extents"]))


def test_generate_dataset_validation(tmp_path):
    with pytest.raises(ScenarioError, match="kind"):
        generate_dataset("spheres", 1, 0, tmp_path)
    with pytest.raises(ScenarioError, match="count"):
        generate_dataset("aab", 0, 0, tmp_path)


# ---------------------------------------------------------------------------
# click commands


def test_cli_run_writes_artifacts(tmp_path):
    scenario = tmp_path / "tiny.yaml"
    scenario.write_text(yaml.safe_dump(tiny_config()))
    out = tmp_path / "out"
    result = CliRunner().invoke(main, [
        "run", "--scenario", str(scenario), "--particles", "3",
        "--seed", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = read_results(out / "results.csv")
    assert len(rows) == 6 and rows[0].seed == 1
    assert read_stats(out / "stats.csv")
    assert read_manifest(out / "manifest.yaml")["scenario"] == str(scenario)


def test_cli_run_override_changes_run(tmp_path):
    scenario = tmp_path / "tiny.yaml"
    scenario.write_text(yaml.safe_dump(tiny_config()))
    out = tmp_path / "out"
    result = CliRunner().invoke(main, [
        "run", "--scenario", str(scenario), "--particles", "2",
        "--out", str(out), "--override", "name=renamed"])
    assert result.exit_code == 0, result.output
    assert read_results(out / "results.csv")[0].scenario == "renamed"


def test_cli_unknown_scenario_exits_2(tmp_path):
    result = CliRunner().invoke(main, [
        "run", "--scenario", "nope", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "config error" in result.output


def test_cli_compare_combines_methods(tmp_path):
    scenario = tmp_path / "tiny.yaml"
    scenario.write_text(yaml.safe_dump(tiny_config()))
    out = tmp_path / "out"
    result = CliRunner().invoke(main, [
        "compare", "--scenario", str(scenario), "--particles", "2",
        "--steps", "0", "--out", str(out),
        "--method", "clasp", "--method", "direct-edit",
        "--seed", "0", "--seed", "1"])
    assert result.exit_code == 0, result.output
    rows = read_results(out / "results.csv")
    seen = {(r.method, r.seed) for r in rows}
    assert seen == {("clasp", 0), ("clasp", 1),
                    ("direct-edit", 0), ("direct-edit", 1)}
    assert len(rows) == 8


def test_cli_eval_matches_run_stats(tmp_path):
    scenario = tmp_path / "tiny.yaml"
    scenario.write_text(yaml.safe_dump(tiny_config()))
    out = tmp_path / "out"
    runner = CliRunner()
    assert runner.invoke(main, [
        "run", "--scenario", str(scenario), "--particles", "3",
        "--out", str(out)]).exit_code == 0
    redone = tmp_path / "redone.csv"
    result = runner.invoke(main, [
        "eval", str(out / "results.csv"), "--out", str(redone)])
    assert result.exit_code == 0, result.output
    assert redone.read_bytes() == (out / "stats.csv").read_bytes()


def test_cli_eval_bad_results_exits_1(tmp_path):
    bad = tmp_path / "results.csv"
    bad.write_text("scenario,method\n")
    result = CliRunner().invoke(main, ["eval", str(bad)])
    assert result.exit_code == 1
    assert "runtime error" in result.output


def test_cli_dataset_command(tmp_path):
    out = tmp_path / "data"
    result = CliRunner().invoke(main, [
        "dataset", "--count", "2", "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "aab_0000.bin").exists()
    assert read_manifest(out / "manifest.yaml")["count"] == 2


def test_cli_version():
    result = CliRunner().invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "clasp" in result.output


def test_method_list_is_stable():
    # the comparison tooling and docs rely on these exact names
    assert METHODS == ("clasp", "clasp-ignore-prior", "clasp-accept-failed",
                       "clasp-no-disambiguation", "rejection",
                       "soft-rejection", "direct-edit",
                       "combined-input-prior")
