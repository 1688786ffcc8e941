import math
import pathlib
import subprocess
import sys
import tempfile

import pytest

from twophase.cli import open_output

TEST_DIR = pathlib.Path(__file__).parent
FILES_DIR = TEST_DIR / "files"
SMALL_CFG = FILES_DIR / "small.cfg"


def _run(*args):
    return subprocess.run(["twophase", *map(str, args)], capture_output=True)


def _summary(stdout: bytes) -> dict:
    lines = stdout.decode().splitlines()
    return dict(line.split(": ", 1) for line in lines if ": " in line)


def test_twophase_version():
    result = _run("-V")
    assert result.returncode == 0
    assert result.stdout.decode().strip()


def test_twophase_distance():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run(
            "distance", "--from", "0,0", "--to", "1,1", "--config", SMALL_CFG, "--out", tmpdir
        )
        assert result.returncode == 0
        summary = _summary(result.stdout)
        assert float(summary["distance"]) == pytest.approx(1.50356, rel=0.01)
        with open(pathlib.Path(tmpdir) / "geodesic.csv", "r") as f:
            lines = f.read().splitlines()
        assert lines[0].startswith("# twophase ")
        assert lines[0].endswith(" seed=7")
        assert lines[1] == "x,y"
        assert lines[2] == "0,0"
        assert lines[-1] == "1,1"
        assert len(lines) - 2 == int(summary["vertices"])


def test_twophase_distance_zero():
    result = _run("distance", "--from", "0.3,0.3", "--to", "0.3,0.3", "--out", "-")
    assert result.returncode == 0
    assert "distance: 0\n" in result.stdout.decode()


def test_twophase_distance_stdout_is_csv():
    result = _run(
        "distance", "--from", "0.1,0.1", "--to", "0.9,0.1", "--config", SMALL_CFG, "--out", "-"
    )
    assert result.returncode == 0
    lines = result.stdout.decode().splitlines()
    assert float(_summary(result.stdout)["distance"]) == pytest.approx(0.8)
    assert lines[2].startswith("# twophase ")
    assert lines[3] == "x,y"
    assert lines[4] == "0.10000000000000001,0.10000000000000001"
    assert lines[-1] == "0.90000000000000002,0.10000000000000001"


def test_twophase_distance_is_reproducible():
    outputs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmpdir:
            result = _run(
                "distance", "--from", "0,0", "--to", "1,1", "--config", SMALL_CFG, "--out", tmpdir
            )
            assert result.returncode == 0
            with open(pathlib.Path(tmpdir) / "geodesic.csv", "rb") as f:
                outputs.append(f.read())
    assert outputs[0] == outputs[1]


def test_twophase_distance_obstacle_endpoint():
    result = _run(
        "distance", "--from", "0,0", "--to", "0.5,0.5", "--p", "inf",
        "--config", SMALL_CFG, "--out", "-",
    )
    assert result.returncode == 2
    assert result.stderr.decode().startswith("twophase: error: disconnected: ")


def test_twophase_distance_resource_limit():
    result = _run(
        "distance", "--from", "0,0", "--to", "1,1", "--epsilon", "1e-5", "--out", "-"
    )
    assert result.returncode == 3


def test_twophase_homogenize_needs_directions():
    result = _run("homogenize", "--directions", "3", "--out", "-")
    assert result.returncode == 1
    assert "n_directions" in result.stderr.decode()


def test_twophase_lambda():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("lambda", "--config", SMALL_CFG, "--out", tmpdir)
        assert result.returncode == 0
        summary = _summary(result.stdout)
        assert float(summary["lambda"]) == pytest.approx(math.pi / 2, abs=1e-4)
        with open(pathlib.Path(tmpdir) / "lambda.csv", "r") as f:
            lines = f.read().splitlines()
        assert lines[1] == "lambda,ax,ay,bx,by,n_samples"
        assert lines[2].endswith(",64")


def test_twophase_lambda_square():
    result = _run("lambda", "--config", FILES_DIR / "square.cfg", "--out", "-")
    assert result.returncode == 0
    assert float(_summary(result.stdout)["lambda"]) == pytest.approx(2.0, abs=1e-3)


def test_twophase_config_error():
    result = _run("lambda", "--config", FILES_DIR / "bad-type.cfg", "--out", "-")
    assert result.returncode == 1
    assert result.stderr.decode().startswith("twophase: error: line 3: metric.p:")


def test_twophase_missing_config():
    result = _run("lambda", "--config", FILES_DIR / "missing.cfg", "--out", "-")
    assert result.returncode == 1


def test_twophase_usage_errors():
    assert _run().returncode == 1
    assert _run("geodesic").returncode == 1
    assert _run("distance", "--from", "0,0").returncode == 1
    assert _run("distance", "--from", "0;0", "--to", "1,1").returncode == 1


def test_twophase_seed_override_changes_header():
    result = _run("lambda", "--config", SMALL_CFG, "--seed", "11", "--out", "-")
    assert result.returncode == 0
    header = [line for line in result.stdout.decode().splitlines() if line.startswith("#")]
    assert header[0].endswith(" seed=11")


def test_twophase_avoidance():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("avoidance", "--config", SMALL_CFG, "--out", tmpdir)
        assert result.returncode == 0
        summary = _summary(result.stdout)
        assert summary["avoidance expected"] == "true"
        assert summary["violations"].endswith("/2")
        with open(pathlib.Path(tmpdir) / "avoidance.csv", "r") as f:
            lines = f.read().splitlines()
        assert lines[0].endswith(" seed=7")
        assert len(lines) == 4


def test_twophase_bounds():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("bounds", "--config", SMALL_CFG, "--out", tmpdir)
        assert result.returncode == 0
        summary = _summary(result.stdout)
        assert summary["pairs"] == "3"
        assert summary["skipped"] == "0"
        assert (pathlib.Path(tmpdir) / "bounds.csv").exists()


QUICK_CFG = FILES_DIR / "quick.cfg"


def _csv_lines(directory, name):
    with open(pathlib.Path(directory) / name, "r") as f:
        return f.read().splitlines()


def test_twophase_homogenize():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("homogenize", "--config", QUICK_CFG, "--svg", "--out", tmpdir)
        assert result.returncode == 0
        assert "norm checks: " in result.stdout.decode()
        lines = _csv_lines(tmpdir, "psi.csv")
        assert lines[1] == "angle,psi,R_last,cauchy_tail,converged"
        assert len(lines) == 2 + 8
        for line in lines[2:]:
            assert 1 - 0.005 <= float(line.split(",")[1]) <= 2
        assert (pathlib.Path(tmpdir) / "psi.svg").exists()


def test_twophase_critical():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("critical", "--config", QUICK_CFG, "--out", tmpdir)
        assert result.returncode == 0
        assert "p=inf: disconnected-odd (passed)" in result.stdout.decode()
        lines = _csv_lines(tmpdir, "critical.csv")
        assert lines[0].endswith(" seed=5")
        assert lines[1].split(",")[:3] == ["p", "parity", "k"]
        assert len(lines) == 2 + 2 * 2 * 2


def test_twophase_critical_is_reproducible():
    outputs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmpdir:
            result = _run("critical", "--config", QUICK_CFG, "--out", tmpdir)
            assert result.returncode == 0
            with open(pathlib.Path(tmpdir) / "critical.csv", "rb") as f:
                outputs.append(f.read())
    assert outputs[0] == outputs[1]


def test_twophase_rate():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("rate", "--config", QUICK_CFG, "--out", tmpdir)
        assert result.returncode == 0
        assert "rate exponent: " in result.stdout.decode()
        lines = _csv_lines(tmpdir, "rate.csv")
        assert lines[1].startswith("epsilon,distance,psi_ref,")
        assert [line.split(",")[0] for line in lines[2:]] == [
            "0.5", "0.25", "0.125", "0.0625",
        ]


def test_twophase_recovery():
    with tempfile.TemporaryDirectory() as tmpdir:
        result = _run("recovery", "--config", QUICK_CFG, "--out", tmpdir)
        assert result.returncode == 0
        lines = _csv_lines(tmpdir, "recovery.csv")
        assert lines[1].startswith("epsilon,pieces,wall_length,refined_length,")
        assert len(lines) == 2 + 4 * 2
        for line in lines[2:]:
            _, _, wall, refined, *_ = line.split(",")
            assert float(refined) <= float(wall) * (1 + 0.02)


def test_open_output(tmp_path):
    with open_output(None) as f:
        assert f is sys.stdout
    with open_output(tmp_path / "out.csv") as f:
        f.write("x,y\n")
    assert (tmp_path / "out.csv").read_text() == "x,y\n"
