import csv

import numpy as np
import pytest

from sinksim.scenario.sinkage import CSV_COLUMNS, RunRecord, Sample
from sinksim.utils.errors import ConfigError, InputFileError
from sinksim.utils.io import (
    BED_HEADER,
    load_bed,
    read_json,
    read_record_csv,
    save_bed,
    write_height_map,
    write_json,
    write_profile_csv,
    write_record_csv,
)
from sinksim.utils.svg import Series, line_chart, nice_ticks


def _samples(n=5):
    return [
        Sample(0.01 * k, -5.0 - 0.1 * k, 0.0, 0.0, -5.0 - 0.1 * k, -1e-4 * k / 3.0,
               1e-4 * k / 3.0, 1e-9 * k, k, 0)
        for k in range(n)
    ]


def test_bed_round_trip_is_exact(tiny_bed, tmp_path):
    tiny_bed.particles.velocities[:] = np.random.default_rng(1).normal(size=(1000, 3)) / 3.0
    path = save_bed(tmp_path / "bed.txt", tiny_bed)
    assert path.read_text(encoding="utf-8").startswith(f"# {BED_HEADER}")
    assert (tmp_path / "bed.txt.json").exists()

    back = load_bed(path)
    for name in ("positions", "velocities", "angular_velocities", "radii", "material_ids",
                 "masses"):
        assert np.array_equal(getattr(back.particles, name), getattr(tiny_bed.particles, name))
    assert back.materials.materials == tiny_bed.materials.materials
    assert back.spec == tiny_bed.spec
    assert back.seed == 3
    assert back.dt_dem == 1e-5
    assert len(back.state.ledger) == 0


def test_bed_needs_header(write_file):
    path = write_file("bed.txt", "1 2 3\n")
    with pytest.raises(ConfigError):
        load_bed(path)


def test_missing_bed(tmp_path):
    with pytest.raises(InputFileError):
        load_bed(tmp_path / "nope.txt")


def test_record_csv_round_trip(tmp_path):
    rec = RunRecord(samples=_samples(), reference_time=0.01, reference_axial=-1e-4 / 3.0,
                    clipping=2)
    path = write_record_csv(tmp_path / "run.csv", rec)
    write_json(path.with_suffix(".json"), rec.summary())
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(rec)

    back = read_record_csv(path)
    assert back.samples == rec.samples
    assert back.reference_time == rec.reference_time
    assert back.reference_axial == rec.reference_axial
    assert back.clipping == 2
    assert back.truncated is None


def test_record_without_summary_recovers_reference(tmp_path):
    rec = RunRecord(samples=_samples(), reference_time=0.01, reference_axial=-1e-4 / 3.0)
    rec.finalize()
    back = read_record_csv(write_record_csv(tmp_path / "run.csv", rec))
    assert back.reference_time == 0.01
    assert back.reference_axial == pytest.approx(rec.reference_axial, abs=1e-18)
    force, sinkage = back.curve()
    assert len(force) == len(rec) - 1
    assert sinkage[0] == 0.0


def test_truncated_record_keeps_marker(tmp_path):
    rec = RunRecord(samples=_samples(3), truncated="particle 4 left the domain (t=0.02s)")
    path = write_record_csv(tmp_path / "run.csv", rec)
    write_json(path.with_suffix(".json"), rec.summary())
    assert path.read_text(encoding="utf-8").splitlines()[-1].startswith("# truncated at t=0.02")
    back = read_record_csv(path)
    assert back.truncated == "particle 4 left the domain (t=0.02s)"
    assert len(back) == 3
    assert back.reference_time is None


def test_header_only_record(tmp_path):
    path = write_record_csv(tmp_path / "run.csv", RunRecord())
    assert path.read_text(encoding="utf-8").splitlines() == [",".join(CSV_COLUMNS)]
    with path.open(encoding="utf-8", newline="") as f:
        assert csv.DictReader(f).fieldnames == list(CSV_COLUMNS)
    assert len(read_record_csv(path)) == 0


def test_record_missing_columns(write_file):
    with pytest.raises(ConfigError):
        read_record_csv(write_file("run.csv", "t_s,sigma_N\n0,1\n"))


def test_json_helpers(tmp_path):
    path = write_json(tmp_path / "out" / "a.json", {"b": np.float64(1.5), "a": np.arange(2)})
    assert path.read_text(encoding="utf-8").index('"a"') < path.read_text().index('"b"')
    assert read_json(path) == {"a": [0, 1], "b": 1.5}


def test_profile_csv(tmp_path):
    path = write_profile_csv(tmp_path / "p.csv", np.array([0.001, 0.003]),
                             np.array([0.02, float("nan")]))
    assert path.read_text(encoding="utf-8").splitlines() == ["r_m,h_m", "0.001,0.02", "0.003,nan"]


def test_chart_has_one_polyline_per_series():
    svg = line_chart([Series("a", [0, 1, 2], [0, 1, 4]), Series("b <2>", [0, 2], [1, 3])],
                     "Load (N)", "Sinkage (mm)", title="demo")
    assert svg.startswith("<svg")
    assert svg.count("<polyline") == 2
    assert 'class="legend"' in svg
    assert "b &lt;2&gt;" in svg
    assert "Sinkage (mm)" in svg


def test_nice_ticks():
    assert nice_ticks(0.0, 66.0) == [0.0, 20.0, 40.0, 60.0]
    assert nice_ticks(0.0, 1.0) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert nice_ticks(0.0, float("nan")) == []


def test_height_map_keeps_empty_cells(tmp_path):
    heights = np.array([[0.01, np.nan], [0.02, 0.03]])
    path = write_height_map(tmp_path / "h.txt", heights, 0.004)
    assert path.read_text(encoding="utf-8").startswith("# cell_m=0.004")
    back = np.loadtxt(path)
    assert np.array_equal(back, heights, equal_nan=True)
