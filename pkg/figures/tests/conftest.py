"""Fixtures: real CSVs produced by the simulation package's CLI.

The figures package consumes the simulator only through its documented
file formats, so the fixtures are generated by invoking the installed
``spinctrl`` command line, never by importing the package.
"""

import os
import subprocess
import sys

import pytest

CONFIG = """
[campaign]
master_seed = 7
n_trials = 2
n_spins = 4
tf_values = 0.1, 1.0, 5.0

[propagation]
substeps = 32
adaptive = false
method = splitstep

[scheme:gauss3]
kind = gaussian_grid
res_a = 3
res_omega = 3
"""


def run_spinctrl(*argv):
    result = subprocess.run(
        [sys.executable, "-m", "spinctrl.cli", *argv], capture_output=True, text=True
    )
    if result.returncode != 0:
        raise RuntimeError(f"spinctrl {' '.join(argv)} failed:\n{result.stderr}")
    return result


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("csv_fixtures")
    config_path = root / "config.ini"
    config_path.write_text(CONFIG)

    campaign_dir = root / "campaign"
    run_spinctrl("campaign", "--config", str(config_path), "--out", str(campaign_dir))

    run_spinctrl(
        "sweep", "--spins", "4", "--seed", "1", "--tf", "0.5", "--family", "gaussian",
        "--res", "5", "--substeps", "32", "--fixed-substeps", "--out", str(root / "sweep"),
    )
    run_spinctrl(
        "evolve", "--spins", "4", "--seed", "1", "--tf", "1.0", "--pulse", "gaussian",
        "--params", "a=10,omega=1", "--substeps", "64", "--fixed-substeps",
        "--out", str(root / "evolve"),
    )
    run_spinctrl(
        "compare", "--campaign", str(campaign_dir / "campaign.csv"),
        "--reference", "gauss3", "--out", str(root / "compare"),
    )
    return root


@pytest.fixture(scope="session")
def campaign_csv(fixture_dir):
    return str(fixture_dir / "campaign" / "campaign.csv")


@pytest.fixture(scope="session")
def landscape_csv(fixture_dir):
    return str(fixture_dir / "sweep" / "landscape.csv")


@pytest.fixture(scope="session")
def pulse_csv(fixture_dir):
    return str(fixture_dir / "evolve" / "pulse.csv")


@pytest.fixture(scope="session")
def compare_csv(fixture_dir):
    return str(fixture_dir / "compare" / "compare.csv")
