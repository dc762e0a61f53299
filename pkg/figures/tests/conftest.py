import subprocess
import sys

import pytest


def _primary_cli(args):
    """Invoke the simulator CLI (the only interface this package consumes)."""
    proc = subprocess.run([sys.executable, "-m", "otfs_bpf.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, f"otfs-bpf {' '.join(args)} failed: {proc.stderr}"


@pytest.fixture(scope="session")
def fresh_outputs(tmp_path_factory):
    """Fresh CSVs from the simulator CLI for all four figures."""
    d = tmp_path_factory.mktemp("cli_outputs")
    coeffs = d / "coeffs.csv"
    sir = d / "sir.csv"
    iddi = d / "iddi.csv"
    ber_ideal = d / "ber_ideal.csv"
    ber_practical = d / "ber_practical.csv"
    _primary_cli(["coeffs", "--M", "128", "--N", "16", "--out", str(coeffs)])
    _primary_cli(["sir", "--M", "128", "--N", "16", "--out", str(sir)])
    _primary_cli(["iddi", "--M", "64", "--N", "16", "--mc-frames", "60",
                  "--seed", "4", "--out", str(iddi)])
    _primary_cli(["ber", "--M", "16", "--N", "4", "--esn0", "0:8:4", "--mode",
                  "ideal", "--frames", "10", "--min-errors", "50",
                  "--seed", "6", "--out", str(ber_ideal)])
    _primary_cli(["ber", "--M", "16", "--N", "4", "--esn0", "0:8:4", "--mode",
                  "practical", "--frames", "10", "--min-errors", "50",
                  "--seed", "6", "--out", str(ber_practical)])
    return {"coeffs": coeffs, "sir": sir, "iddi": iddi,
            "ber_ideal": ber_ideal, "ber_practical": ber_practical}
