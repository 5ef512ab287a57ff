"""Figure rendering: payload fidelity, gaps, determinism."""

import pytest
from matplotlib.figure import Figure

from plotkit.figures import _draw_boxes, _draw_likelihood, \
    plot_chamfer_boxes, plot_likelihood, read_metadata
from plotkit.tables import SchemaError, StatsTable, read_stats


def box_steps(payload, method):
    (series,) = [s for s in payload["series"] if s["method"] == method]
    return series["steps"]


# --------------------------------------------------------------------------
# box plot fidelity: the image metadata is the CSV, verbatim


def test_box_payload_parses_back_equal_to_stats(write_stats, canon_lines,
                                                tmp_path):
    table = read_stats(write_stats(canon_lines))
    out = tmp_path / "boxes.svg"
    returned = plot_chamfer_boxes(table, out)
    payload = read_metadata(out)
    assert payload == returned
    assert payload["kind"] == "chamfer-boxes"
    rows = {(r.method, r.step): r for r in table.rows}
    for series in payload["series"]:
        for entry in series["steps"]:
            row = rows[(series["method"], entry["step"])]
            assert entry["n_valid"] == row.n_valid
            if row.n_valid > 0:
                assert entry["q1"] == row.q1
                assert entry["median"] == row.median
                assert entry["q3"] == row.q3
                assert entry["mean"] == row.mean
            else:
                assert set(entry) == {"step", "n_valid"}


def test_zero_valid_step_draws_no_box(write_stats, canon_lines):
    table = read_stats(write_stats(canon_lines))
    ax = Figure().add_subplot()
    payload, drawn = _draw_boxes(ax, table)
    # 5 of the 6 rows have valid particles; the rejection step-2 row is a gap
    assert drawn == 5
    assert box_steps(payload, "rejection")[2] == {"step": 2, "n_valid": 0}


def test_all_empty_series_draws_nothing(write_stats):
    lines = ["deep-box,rejection,0,0,0,,,,,0",
             "deep-box,rejection,0,1,0,,,,,0"]
    table = read_stats(write_stats(lines))
    ax = Figure().add_subplot()
    payload, drawn = _draw_boxes(ax, table)
    assert drawn == 0
    assert [e["n_valid"] for e in box_steps(payload, "rejection")] == [0, 0]


def test_rerender_is_byte_identical(write_stats, canon_lines, tmp_path):
    table = read_stats(write_stats(canon_lines))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plot_chamfer_boxes(table, a)
    plot_chamfer_boxes(table, b)
    assert a.read_bytes() == b.read_bytes()


def test_png_metadata_round_trips(write_stats, canon_lines, tmp_path):
    table = read_stats(write_stats(canon_lines))
    out = tmp_path / "boxes.png"
    returned = plot_chamfer_boxes(table, out)
    assert read_metadata(out) == returned


def test_method_labels_appear_in_svg_text(write_stats, canon_lines, tmp_path):
    table = read_stats(write_stats(canon_lines))
    out = tmp_path / "boxes.svg"
    payload = plot_chamfer_boxes(table, out, labels={"clasp": "CLASP (ours)"})
    assert payload["series"][0]["label"] == "CLASP (ours)"
    text = out.read_text()
    assert "CLASP (ours)" in text
    assert "rejection" in text  # unmapped methods keep their CSV name


def test_repeated_seeds_get_seed_suffix(write_stats):
    lines = ["deep-box,clasp,0,0,30,0.01,0.008,0.01,0.012,1.0",
             "deep-box,clasp,1,0,30,0.02,0.018,0.02,0.022,1.0"]
    table = read_stats(write_stats(lines))
    payload, _ = _draw_boxes(Figure().add_subplot(), table)
    assert [s["label"] for s in payload["series"]] == \
        ["clasp (seed 0)", "clasp (seed 1)"]


def test_two_scenarios_get_scenario_prefix(write_stats):
    lines = ["deep-box,clasp,0,0,30,0.01,0.008,0.01,0.012,1.0",
             "shallow-box,clasp,0,0,30,0.02,0.018,0.02,0.022,1.0"]
    table = read_stats(write_stats(lines))
    payload, _ = _draw_boxes(Figure().add_subplot(), table)
    assert [s["label"] for s in payload["series"]] == \
        ["deep-box: clasp", "shallow-box: clasp"]


def test_empty_table_is_rejected(tmp_path):
    with pytest.raises(SchemaError, match="empty table"):
        plot_chamfer_boxes(StatsTable(()), tmp_path / "boxes.svg")
    with pytest.raises(SchemaError, match="empty table"):
        plot_likelihood(StatsTable(()), tmp_path / "lik.svg")


def test_unknown_extension_is_rejected(write_stats, canon_lines, tmp_path):
    table = read_stats(write_stats(canon_lines))
    with pytest.raises(ValueError, match="svg or .png"):
        plot_chamfer_boxes(table, tmp_path / "boxes.pdf")


# --------------------------------------------------------------------------
# likelihood lines


def test_likelihood_one_line_per_method(write_stats, canon_lines, tmp_path):
    table = read_stats(write_stats(canon_lines))
    ax = Figure().add_subplot()
    payload, lines = _draw_likelihood(ax, table)
    assert len(lines) == 2
    assert [ln.get_label() for ln in lines] == ["clasp", "rejection"]
    clasp, rejection = payload["series"]
    assert clasp["steps"] == [0, 1, 2]
    assert clasp["likelihood"] == [81.25, 105.5, 210.125]
    # gap rows still carry a likelihood value (the kernel sum is over all
    # particles), so the line covers every step
    assert rejection["likelihood"] == [66.0, 50.0, 0.0]
    out = tmp_path / "lik.svg"
    assert plot_likelihood(table, out) == read_metadata(out)


def test_likelihood_constant_series_renders(write_stats, tmp_path):
    lines = [f"deep-box,clasp,0,{s},30,0.01,0.008,0.01,0.012,42.0"
             for s in range(3)]
    table = read_stats(write_stats(lines))
    out = tmp_path / "lik.svg"
    payload = plot_likelihood(table, out)
    assert payload["series"][0]["likelihood"] == [42.0] * 3


def test_likelihood_rerender_is_byte_identical(write_stats, canon_lines,
                                               tmp_path):
    table = read_stats(write_stats(canon_lines))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plot_likelihood(table, a)
    plot_likelihood(table, b)
    assert a.read_bytes() == b.read_bytes()


# --------------------------------------------------------------------------
# metadata reader edge cases


def test_read_metadata_requires_payload(tmp_path):
    bare = tmp_path / "bare.svg"
    bare.write_text('<svg xmlns="http://www.w3.org/2000/svg"></svg>')
    with pytest.raises(SchemaError, match="no description"):
        read_metadata(bare)


def test_read_metadata_rejects_other_types(tmp_path):
    with pytest.raises(ValueError, match="unsupported"):
        read_metadata(tmp_path / "figure.gif")
