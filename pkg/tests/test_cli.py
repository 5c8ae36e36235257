"""CLI surface: run orchestration, config validation, vectors, exit codes."""

import csv
import json

import pytest

from zkpot.cli import load_config, main
from zkpot.sim.scenario import ConfigError


def write_config(tmp_path, body):
    path = tmp_path / "config.toml"
    path.write_text(body)
    return str(path)


SMALL = """
[run]
output_dir = "{out}"
modes = ["conventional_cps", "pot_1s"]
repeats = 2
seed = 11

[scenario]
duration_ticks = 60

[scenario.mobility]
kind = "manhattan"
rows = 4
cols = 4
n_vehicles = 12
"""


def test_run_writes_artifacts_per_mode_and_repeat(tmp_path, capsys):
    out = tmp_path / "results"
    config = write_config(tmp_path, SMALL.format(out=out))
    assert main(["run", config]) == 0
    for mode in ("conventional_cps", "pot_1s"):
        for rep in ("0", "1"):
            run_dir = out / mode / rep
            for name in ("verification_ratio.csv", "ttv_hist.csv",
                         "bandwidth.csv", "coverage.csv", "manifest.json"):
                assert (run_dir / name).exists()
            manifest = json.loads((run_dir / "manifest.json").read_text())
            assert manifest["seed"] == 11 + int(rep)
            assert manifest["mode"] == mode
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["mode"] for r in rows] == ["conventional_cps", "pot_1s"]


def test_run_flags_override_config(tmp_path):
    out = tmp_path / "flagged"
    config = write_config(tmp_path, SMALL.format(out=tmp_path / "ignored"))
    assert main(["run", config, "--output", str(out), "--mode", "local_only",
                 "--seed", "99"]) == 0
    assert (out / "local_only" / "0" / "manifest.json").exists()
    manifest = json.loads((out / "local_only" / "0" / "manifest.json").read_text())
    assert manifest["seed"] == 99


def test_unknown_mode_is_config_error(tmp_path, capsys):
    config = write_config(tmp_path, SMALL.format(out=tmp_path) + "\n")
    assert main(["run", config, "--mode", "warp_drive"]) == 2
    assert "warp_drive" in capsys.readouterr().err


def test_unknown_key_named_in_error(tmp_path):
    bad = SMALL.format(out=tmp_path) + "\n[scenario.channel]\nrage_m = 300.0\n"
    with pytest.raises(ConfigError, match=r"scenario\.channel\.rage_m"):
        load_config(write_config(tmp_path, bad))


def test_missing_config_file_is_config_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.toml")]) == 2


def test_invalid_parameter_value_is_config_error(tmp_path):
    bad = SMALL.format(out=tmp_path).replace('kind = "manhattan"',
                                             'kind = "manhattan"\nspeed_min = -1.0')
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, bad))


def test_trace_mobility_config(tmp_path, triangle_trace):
    trace_path = triangle_trace(ticks=5)
    body = f"""
[run]
output_dir = "{tmp_path / 'tr'}"
modes = ["pot_1s"]
seed = 1

[scenario]
duration_ticks = 5

[scenario.mobility]
kind = "trace"
path = "{trace_path}"

[scenario.channel]
pdr = 1.0
"""
    assert main(["run", write_config(tmp_path, body)]) == 0
    ratio_csv = (tmp_path / "tr" / "pot_1s" / "0" / "verification_ratio.csv").read_text()
    assert len(ratio_csv.splitlines()) == 4  # header + 3 vehicles


# --- vectors -------------------------------------------------------------------------

def test_vectors_roundtrip(tmp_path, capsys):
    path = str(tmp_path / "v.txt")
    assert main(["vectors", "gen", "--count", "25", "--seed", "5", "--out", path]) == 0
    assert main(["vectors", "check", path]) == 0


def test_vectors_detect_corruption(tmp_path, capsys):
    path = tmp_path / "v.txt"
    assert main(["vectors", "gen", "--count", "5", "--seed", "5",
                 "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    # flip one hex digit in the scalar field of record 3
    fields = lines[3].split(",")
    fields[1] = ("0" if fields[1][0] != "0" else "1") + fields[1][1:]
    lines[3] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    assert main(["vectors", "check", str(path)]) == 1
    assert "record 3" in capsys.readouterr().err


def test_vectors_check_missing_file_is_io_error(tmp_path):
    assert main(["vectors", "check", str(tmp_path / "absent.txt")]) == 3


def test_vectors_deterministic(tmp_path):
    a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    main(["vectors", "gen", "--count", "10", "--seed", "7", "--out", a])
    main(["vectors", "gen", "--count", "10", "--seed", "7", "--out", b])
    assert open(a).read() == open(b).read()
