import sys
import time
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from swfocal.environment import SoundSpeedProfile, Waveguide  # noqa: E402
from swfocal.grid import build_doa_grid  # noqa: E402
from swfocal import io as sio  # noqa: E402

ENV_FILE = REPO_ROOT / "configs" / "coastal_216m_env.json"


@pytest.fixture(scope="session")
def iso_wg():
    """Constant 1500 m/s water column, 216.5 m deep, receiver at 150 m."""
    return Waveguide(
        ssp=SoundSpeedProfile(knots=((0.0, 1500.0), (216.5, 1500.0))),
        bottom_depth=216.5,
        receiver_depth=150.0,
    )


@pytest.fixture(scope="session")
def coastal_wg():
    """The bundled downward-refracting coastal profile."""
    return sio.read_environment(ENV_FILE)


@pytest.fixture(scope="session")
def iso_grid(iso_wg):
    return build_doa_grid(iso_wg, (100.0, 2500.0, 10.0, 175.0), 61, 34)


@pytest.fixture(scope="session")
def refr_grid(coastal_wg):
    """Small refractive grid for interpolation and tracking tests."""
    return build_doa_grid(coastal_wg, (300.0, 1200.0, 30.0, 150.0), 91, 41)


@pytest.fixture(scope="session")
def full_grid(coastal_wg):
    """Full production-resolution grid; build time feeds the acceptance gate."""
    t0 = time.perf_counter()
    grid = build_doa_grid(coastal_wg, (100.0, 2500.0, 10.0, 175.0), 2400, 165)
    return grid, time.perf_counter() - t0
