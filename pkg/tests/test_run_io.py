import math

import numpy as np
import pytest

from sphereflow import chord_arc, generators, run_io
from sphereflow.errors import ConfigParseError, MissingArtifacts, RunDirLocked


def test_profile_csv_layout(tmp_path):
    prof = chord_arc.profile(generators.parallel_curve(math.pi / 4, 256), 64)
    path = tmp_path / "prof.csv"
    run_io.write_profile_csv(prof, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "z,psi,i,j"
    assert len(lines) == 65
    cols = lines[1].split(",")
    assert len(cols) == 4
    float(cols[0]), float(cols[1]), int(cols[2]), int(cols[3])


def test_sparse_profile_keeps_empty_bins(tmp_path):
    # tiny curve, many bins: empty bins are reported (NaN), never fatal
    prof = chord_arc.profile(generators.great_circle_curve((0, 0, 1), 16), 64)
    assert int(np.count_nonzero(prof.empty_bins)) > 0
    run_io.write_profile_csv(prof, tmp_path / "sparse.csv")
    assert "nan" in (tmp_path / "sparse.csv").read_text()


def test_svg_overlay_matches_parallel(tmp_path):
    prof = chord_arc.profile(generators.parallel_curve(math.pi / 4, 512), 64)
    run_io.write_profile_svg(prof, tmp_path / "p.svg")
    svg = (tmp_path / "p.svg").read_text()
    assert svg.count("polyline") == 2
    # data level: the parallel profile coincides with the limit overlay
    keep = ~prof.empty_bins
    overlay = prof.L / np.pi * np.sin(np.pi * prof.pair_z[keep])
    assert float(np.max(np.abs(prof.psi[keep] - overlay))) < 1e-3 * prof.L


def test_curve_reader_trims_repeated_closing_row(tmp_path):
    curve = generators.great_circle_curve((0, 0, 1), 64)
    rows = ["x,y,z"]
    for p in curve.points:
        rows.append(",".join(repr(float(v)) for v in p))
    rows.append(rows[1])  # explicit closure, against the convention
    (tmp_path / "closed.csv").write_text("\n".join(rows) + "\n")
    again = run_io.read_curve_csv(tmp_path / "closed.csv")
    assert again.n == 64


def test_curve_reader_rejects_bad_header(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b,c\n1,0,0\n")
    with pytest.raises(ConfigParseError):
        run_io.read_curve_csv(tmp_path / "bad.csv")


def test_missing_artifacts(tmp_path):
    with pytest.raises(MissingArtifacts):
        run_io.load_run(tmp_path)


def test_lockfile_exclusive(tmp_path):
    with run_io.RunDirLock(tmp_path / ".lock"):
        with pytest.raises(RunDirLocked):
            with run_io.RunDirLock(tmp_path / ".lock"):
                pass
    # released on exit
    with run_io.RunDirLock(tmp_path / ".lock"):
        pass
