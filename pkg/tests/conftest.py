import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from radiochart.environment import BaseStation, EnvironmentSpec, RadioConfig, Wall
from radiochart.sim import generate_dataset, generate_trajectory


@pytest.fixture
def open_env():
    """10 x 10 m free-space environment, three stations, no walls."""
    return EnvironmentSpec(
        bounds=(0.0, 0.0, 10.0, 10.0),
        base_stations=[
            BaseStation(0, (0.5, 0.5)),
            BaseStation(1, (9.5, 0.5)),
            BaseStation(2, (5.0, 9.5)),
        ],
    )


@pytest.fixture
def mirror_env():
    """One reflective wall along y = 0 between x in [-6, 6]."""
    return EnvironmentSpec(
        bounds=(-6.0, -1.0, 6.0, 6.0),
        base_stations=[BaseStation(0, (1.0, 2.0)), BaseStation(1, (-3.0, 4.0))],
        walls=[Wall((-6.0, 0.0), (6.0, 0.0))],
    )


@pytest.fixture
def small_radio():
    """Noise-free radio whose window comfortably covers a 10 x 10 m area."""
    return RadioConfig(
        bandwidth=500e6,
        sample_rate=1e9,
        cir_length=64,
        max_reflection_order=1,
        noise_std=0.0,
        mode="tof",
        toa_noise_std=0.0,
    )


@pytest.fixture
def grid_dataset(open_env, small_radio):
    """25-snapshot noiseless grid dataset on the open environment."""
    rng = np.random.default_rng(7)
    traj = generate_trajectory(open_env, "grid", 25, 1.0, 0.5, rng)
    return generate_dataset(open_env, small_radio, traj, rng_seed=11)
