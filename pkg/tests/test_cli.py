import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from edgefuse import gridmap
from edgefuse.cli import main
from edgefuse.pipeline import CSV_FIELDS


def read_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_schedule_row_count(apartment_path, tmp_path, capsys):
    code = main(["schedule", str(apartment_path), "--policy", "recslam,cloud", "--seeds", "10",
                 "-o", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "schedule.csv")
    assert len(rows) == 11
    assert [r["policy"] for r in rows].count("cloud") == 1
    assert list(rows[0]) == list(CSV_FIELDS)
    out = capsys.readouterr().out
    assert "recslam" in out and "cloud" in out


def test_schedule_oracle_column(apartment_path, tmp_path):
    assert main(["schedule", str(apartment_path), "--policy", "recslam", "--seeds", "2", "--oracle",
                 "--json", "-o", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "schedule.csv")
    assert all(float(r["oracle_gap_s"]) >= -1e-12 for r in rows)
    report = json.loads((tmp_path / "reports" / "schedule-R10-recslam-0.json").read_text())
    assert report["oracle_latency_s"] == pytest.approx(float(rows[0]["oracle_latency_s"]))


def test_malformed_json_exits_2_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"robots": [')
    out = tmp_path / "out"
    assert main(["schedule", str(bad), "-o", str(out)]) == 2
    assert not out.exists()
    assert "line 1" in capsys.readouterr().err


def test_invalid_field_exits_2(tmp_path, capsys):
    doc = {"robots": [{"id": 0, "raw_frame_bytes": -5, "map_bytes": 1}],
           "edges": [{"id": 0, "uplink_bw_robot": 1, "uplink_bw_cloud": 1}],
           "overlap_matrix": [[0]]}
    f = tmp_path / "s.json"
    f.write_text(json.dumps(doc))
    assert main(["schedule", str(f), "-o", str(tmp_path / "o")]) == 2
    assert "raw_frame_bytes" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--policy", ""], ["--policy", "bogus"], ["--seeds", "x"],
                                   ["--tabu-capacity", "0"], ["--profile", "nowhere"]])
def test_bad_flags_exit_2(apartment_path, tmp_path, flags):
    assert main(["schedule", str(apartment_path), *flags, "-o", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_missing_scenario_exits_2(tmp_path):
    assert main(["schedule", str(tmp_path / "nope.json")]) == 2


def test_sweep(apartment_path, tmp_path):
    assert main(["sweep", str(apartment_path), "--robots", "6,8,10", "--seeds", "3",
                 "--policy", "recslam,random,cloud", "-o", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "sweep.csv")
    assert len(rows) == 3 * (3 + 3 + 1)
    assert [int(r["robots"]) for r in rows] == sorted(int(r["robots"]) for r in rows)


@pytest.mark.parametrize("flags", [["--robots", ""], ["--robots", "0"], ["--robots", "4", "--policy", ""],
                                   ["--robots", "4", "--density", "2"],
                                   ["--robots", "4", "--weight-range", "0.3,0.1"]])
def test_sweep_bad_input(apartment_path, tmp_path, flags):
    assert main(["sweep", str(apartment_path), *flags, "-o", str(tmp_path / "o")]) == 2


def test_byte_identical_reruns(apartment_path, tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        assert main(["schedule", str(apartment_path), "--seeds", "4", "--no-timestamp", "--json",
                     "-o", str(d)]) == 0
        outs.append(d)
    assert (outs[0] / "schedule.csv").read_bytes() == (outs[1] / "schedule.csv").read_bytes()
    for f in sorted((outs[0] / "reports").iterdir()):
        assert f.read_bytes() == (outs[1] / "reports" / f.name).read_bytes()


def test_jobs_do_not_change_output(apartment_path, tmp_path):
    for jobs in ("1", "2"):
        assert main(["sweep", str(apartment_path), "--robots", "6,12", "--seeds", "3", "--no-timestamp",
                     "--jobs", jobs, "-o", str(tmp_path / jobs)]) == 0
    assert (tmp_path / "1" / "sweep.csv").read_bytes() == (tmp_path / "2" / "sweep.csv").read_bytes()


def test_timestamp_header(apartment_path, tmp_path):
    main(["schedule", str(apartment_path), "--seeds", "1", "-o", str(tmp_path)])
    first = (tmp_path / "schedule.csv").read_text().splitlines()[0]
    assert first.startswith("# edgefuse")


def test_mapmerge_self(tmp_path, capsys):
    m = gridmap.room_map(30, 20, 3, offset=(5, 2))
    src = tmp_path / "a.pgm"
    gridmap.write_map(src, m)
    out = tmp_path / "merged.pgm"
    assert main(["mapmerge", str(src), str(src), "-o", str(out)]) == 0
    assert out.read_bytes() == src.read_bytes()
    assert "overlap[0,1] = 0.500000" in capsys.readouterr().out


def test_mapmerge_disjoint(tmp_path, capsys):
    a, b = gridmap.rect_map(10, 10), gridmap.rect_map(8, 5, (40, 0), fill=gridmap.OCCUPIED)
    gridmap.write_map(tmp_path / "a.pgm", a)
    gridmap.write_map(tmp_path / "b.pgm", b)
    out = tmp_path / "m.pgm"
    assert main(["mapmerge", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm"), "-o", str(out)]) == 0
    assert gridmap.known_size_bytes(gridmap.read_map(out)) == 140
    assert "known=140" in capsys.readouterr().out


def test_mapmerge_bad_file(tmp_path):
    (tmp_path / "x.pgm").write_bytes(b"P6\n1 1\n255\n\x00")
    (tmp_path / "x.yaml").write_text("resolution: 0.05\norigin: [0, 0, 0]\n")
    assert main(["mapmerge", str(tmp_path / "x.pgm"), "-o", str(tmp_path / "o.pgm")]) == 2
    assert not (tmp_path / "o.pgm").exists()


def test_profile_command(capsys):
    assert main(["profile", "--k-min", "2", "--k-max", "5", "--reps", "1"]) == 0
    out = capsys.readouterr().out
    assert "checks=10" in out and "R2=" in out
    assert main(["profile", "--k-min", "2", "--k-max", "3"]) == 2


def test_module_entry_point(apartment_path, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "edgefuse", "schedule", str(apartment_path), "--seeds", "1",
                           "--policy", "cloud", "-o", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "wrote" in proc.stdout
