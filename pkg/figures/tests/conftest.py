"""Fixture data produced by the primary component's CLI (its external interface)."""
import subprocess
import sys

import pytest


def run_primary(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "ddregister.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def fixtures(tmp_path_factory):
    """One directory of real CLI outputs covering every panel's inputs."""
    root = tmp_path_factory.mktemp("primary-outputs")
    run_primary(
        "spectroscopy", "--t-min", 6.95, "--t-max", 7.55, "--t-step", 0.005,
        "--repeats", 12, "--include", "q1,q2", "--out-dir", root / "spec",
    )
    run_primary("resonances", "--qubit", "q1", "--orders", "2", "--out-dir", root / "res")
    run_primary(
        "scan", "--kind", "metrics", "--qubits", "q1,q2,q3",
        "--t-min", 2.44, "--t-max", 2.50, "--t-step", 0.005,
        "--n-min", 1, "--n-max", 10, "--out-dir", root / "grid",
    )
    run_primary(
        "simulate", "mqc", "--mode", "bipartite", "--qubits", "q1",
        "--backend", "ideal", "--phi-max", 12.6, "--phi-step", 0.524,
        "--out-dir", root / "mqc",
    )
    run_primary(
        "simulate", "repeat", "--kind", "cx", "--qubits", "q1",
        "--backend", "ideal", "--n-values", "0,1,2,3,4,5,6,7,8", "--out-dir", root / "rep",
    )
    run_primary("calibrate", "--gate", "table", "--out-dir", root / "cal")
    return {
        "spectrum": root / "spec" / "spectroscopy.csv",
        "resonances": root / "res" / "resonances_q1.json",
        "heatmap": root / "grid" / "metrics.csv",
        "mqc": root / "mqc" / "mqc.csv",
        "mqc_fit": root / "mqc" / "fit.json",
        "decay": root / "rep" / "repeat.csv",
        "calibration": root / "cal" / "calibration_table.json",
    }
