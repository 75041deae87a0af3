"""Simulator tests: image sources, multipath geometry, CIR synthesis."""

import math

import numpy as np
import pytest

from radiochart.environment import C_LIGHT, BaseStation, EnvironmentSpec, RadioConfig, Wall
from radiochart.sim import (
    MpcList,
    generate_dataset,
    generate_trajectory,
    image_sources,
    multipath,
    simulate_cir,
)

from oracles import enumerate_image_positions


def test_image_sources_order_zero_is_station(open_env):
    sources = image_sources(open_env, 0, 0)
    assert len(sources) == 1
    assert sources[0].order == 0
    np.testing.assert_allclose(sources[0].position, [0.5, 0.5])


def test_image_sources_single_wall_mirror(mirror_env):
    sources = image_sources(mirror_env, 0, 1)
    positions = {tuple(np.round(s.position, 9)) for s in sources}
    assert (1.0, 2.0) in positions
    assert (1.0, -2.0) in positions  # mirror across y = 0
    assert len(sources) == 2


def test_image_sources_match_enumeration_oracle():
    env = EnvironmentSpec(
        bounds=(0.0, 0.0, 10.0, 10.0),
        base_stations=[BaseStation(0, (2.0, 3.0)), BaseStation(1, (8.0, 8.0))],
        walls=[Wall((0.0, 0.0), (10.0, 0.0)), Wall((0.0, 0.0), (0.0, 10.0))],
    )
    got = sorted(
        (round(s.position[0], 9), round(s.position[1], 9), s.order)
        for s in image_sources(env, 0, 2)
    )
    walls = [((0.0, 0.0), (10.0, 0.0)), ((0.0, 0.0), (0.0, 10.0))]
    expected = sorted(
        (round(p[0], 9), round(p[1], 9), order)
        for p, order in enumerate_image_positions((2.0, 3.0), walls, 2)
    )
    assert got == expected


def test_image_sources_unknown_station(open_env):
    with pytest.raises(KeyError):
        image_sources(open_env, 99, 1)


def test_multipath_open_env_single_los(open_env, small_radio):
    mpcs = multipath(open_env, small_radio, (3.5, 0.5))  # 3 m from station 0
    assert len(mpcs[0]) == 1
    assert mpcs[0].delays[0] == pytest.approx(3.0 / C_LIGHT, rel=1e-12)
    assert abs(mpcs[0].gains[0]) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_multipath_position_on_station_clamped(open_env, small_radio):
    mpcs = multipath(open_env, small_radio, (0.5, 0.5))
    assert mpcs[0].delays[0] == 0.0
    # amplitude clamped at one sample of range resolution
    assert abs(mpcs[0].gains[0]) == pytest.approx(small_radio.sample_rate / C_LIGHT)


def test_multipath_single_wall_hand_geometry(mirror_env, small_radio):
    # station 0 at (1, 2), receiver at (4, 2): LoS 3 m; mirror (1, -2) gives
    # an unfolded reflected length of |(4,2)-(1,-2)| = 5 m
    mpcs = multipath(mirror_env, small_radio, (4.0, 2.0))
    assert len(mpcs[0]) == 2
    np.testing.assert_allclose(mpcs[0].delays * C_LIGHT, [3.0, 5.0], rtol=1e-12)
    np.testing.assert_allclose(
        np.abs(mpcs[0].gains), [1.0 / 3.0, 0.7 / 5.0], rtol=1e-12
    )


def test_multipath_outside_bounds_errors(open_env, small_radio):
    with pytest.raises(ValueError, match="outside"):
        multipath(open_env, small_radio, (11.0, 3.0))


def test_multipath_blocker_removes_los(small_radio):
    env = EnvironmentSpec(
        bounds=(0.0, 0.0, 10.0, 10.0),
        base_stations=[BaseStation(0, (1.0, 5.0)), BaseStation(1, (9.0, 5.0))],
        blockers=[((5.0, 0.0), (5.0, 10.0))],
    )
    mpcs = multipath(env, small_radio, (9.0, 5.0))
    assert len(mpcs[0]) == 0  # blocked, no walls to bounce off
    assert len(mpcs[1]) == 1  # same side as station 1


def test_wall_does_not_remove_los(small_radio):
    # reflective walls are transparent to transmission; only blockers cut paths
    base = dict(
        bounds=(0.0, 0.0, 10.0, 10.0),
        base_stations=[BaseStation(0, (1.0, 5.0)), BaseStation(1, (9.0, 5.0))],
    )
    plain = EnvironmentSpec(**base)
    walled = EnvironmentSpec(**base, walls=[Wall((5.0, 0.0), (5.0, 10.0))])
    d_plain = multipath(plain, small_radio, (9.0, 5.0))[0].delays
    d_walled = multipath(walled, small_radio, (9.0, 5.0))[0].delays
    assert d_plain[0] in d_walled  # order-0 entry survives


def test_simulate_cir_peak_on_grid(small_radio):
    delay = 10.0 / small_radio.sample_rate
    mpcs = MpcList(np.array([delay]), np.array([1.0 + 0.0j]))
    cir, toa = simulate_cir(mpcs, small_radio)
    assert cir[10] == pytest.approx(1.0, abs=1e-15)
    assert np.argmax(cir) == 10
    assert toa == pytest.approx(delay)


def test_simulate_cir_peak_index_matches_rounded_delay(small_radio):
    rng = np.random.default_rng(3)
    for _ in range(20):
        delay = rng.uniform(0, 50) / small_radio.sample_rate
        cir, _ = simulate_cir(MpcList(np.array([delay]), np.array([1.0 + 0j])), small_radio)
        assert np.argmax(cir) == round(delay * small_radio.sample_rate)


def test_simulate_cir_empty_is_flagged(small_radio):
    cir, toa = simulate_cir(MpcList(np.empty(0), np.empty(0, dtype=complex)), small_radio)
    assert np.all(cir == 0.0)
    assert math.isnan(toa)


def test_simulate_cir_matches_per_sample_formula(small_radio):
    rng = np.random.default_rng(5)
    delays = np.sort(rng.uniform(0, 40, size=2)) / small_radio.sample_rate
    gains = rng.normal(size=2) + 1j * rng.normal(size=2)
    cir, _ = simulate_cir(MpcList(delays, gains), small_radio)
    # direct evaluation, scalar math per sample
    for t in range(small_radio.cir_length):
        acc = 0.0 + 0.0j
        for d, g in zip(delays, gains):
            x = small_radio.bandwidth * (t / small_radio.sample_rate - d)
            s = 1.0 if x == 0 else math.sin(math.pi * x) / (math.pi * x)
            acc += g * s
        assert cir[t] == pytest.approx(abs(acc), abs=1e-12)


def test_simulate_cir_delay_beyond_window_errors(small_radio):
    late = (small_radio.cir_length + 5) / small_radio.sample_rate
    mpcs = MpcList(np.array([0.0, late]), np.array([1.0 + 0j, 1.0 + 0j]))
    with pytest.raises(ValueError, match="component 1"):
        simulate_cir(mpcs, small_radio)


def test_grid_trajectory_121_points(open_env):
    rng = np.random.default_rng(0)
    positions, ts = generate_trajectory(open_env, "grid", 121, 1.0, 0.5, rng)
    assert positions.shape == (121, 2)
    xs = np.unique(positions[:, 0])
    assert xs.size == 11 and np.allclose(np.diff(xs), 1.0)  # 1 m spacing
    assert np.all(np.diff(ts) > 0)


def test_random_waypoint_kinematics(open_env):
    rng = np.random.default_rng(1)
    speed, dt = 1.3, 0.5
    positions, _ = generate_trajectory(open_env, "random_waypoint", 400, speed, dt, rng)
    steps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
    assert np.all(steps <= speed * dt + 1e-9)
    assert all(open_env.contains(p) for p in positions)


def test_trajectory_same_seed_identical(open_env):
    a, _ = generate_trajectory(open_env, "random_waypoint", 50, 1.0, 0.5, np.random.default_rng(42))
    b, _ = generate_trajectory(open_env, "random_waypoint", 50, 1.0, 0.5, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_generate_dataset_single_snapshot(open_env, small_radio):
    traj = (np.array([[5.0, 5.0]]), np.array([0.0]))
    ds = generate_dataset(open_env, small_radio, traj, rng_seed=0)
    assert len(ds) == 1
    assert ds.snapshots[0].cirs.shape == (3, small_radio.cir_length)


def test_tof_measured_toa_matches_geometry(open_env, small_radio):
    rng = np.random.default_rng(2)
    pts = rng.uniform(1.0, 9.0, size=(10, 2))
    ds = generate_dataset(open_env, small_radio, (pts, np.arange(10.0)), rng_seed=3)
    stations = open_env.station_positions()
    for snap in ds.snapshots:
        for k, bs in enumerate(stations):
            true_range = np.linalg.norm(snap.position - bs)
            assert snap.measured_toa[k] * C_LIGHT == pytest.approx(true_range, abs=1e-9)


def test_tdoa_reference_zero_per_snapshot(open_env, small_radio):
    radio = RadioConfig(**{**small_radio.to_dict(), "mode": "tdoa", "toa_noise_std": 1e-9})
    rng = np.random.default_rng(4)
    pts = rng.uniform(1.0, 9.0, size=(8, 2))
    ds = generate_dataset(open_env, radio, (pts, np.arange(8.0)), rng_seed=5)
    for snap in ds.snapshots:
        assert np.count_nonzero(snap.measured_toa == 0.0) == 1
        assert np.all(snap.measured_toa >= 0.0)


def test_dataset_determinism(open_env, small_radio):
    rng = np.random.default_rng(6)
    pts = rng.uniform(1.0, 9.0, size=(6, 2))
    a = generate_dataset(open_env, small_radio, (pts, np.arange(6.0)), rng_seed=9)
    b = generate_dataset(open_env, small_radio, (pts, np.arange(6.0)), rng_seed=9)
    for sa, sb in zip(a.snapshots, b.snapshots):
        assert np.array_equal(sa.cirs, sb.cirs)
        assert np.array_equal(sa.measured_toa, sb.measured_toa)


def test_dataset_roundtrip(tmp_path, grid_dataset):
    grid_dataset.save(tmp_path / "ds")
    loaded = type(grid_dataset).load(tmp_path / "ds")
    assert len(loaded) == len(grid_dataset)
    for a, b in zip(grid_dataset.snapshots, loaded.snapshots):
        assert np.array_equal(a.cirs, b.cirs)
        np.testing.assert_allclose(a.measured_toa, b.measured_toa)
        np.testing.assert_allclose(a.position, b.position)


def test_window_invariant_enforced(open_env):
    # 16 samples at 1 GHz reach 4.8 m, far below the 14.1 m diagonal
    radio = RadioConfig(bandwidth=500e6, sample_rate=1e9, cir_length=16)
    with pytest.raises(ValueError, match="diagonal"):
        radio.validate_for(open_env)


def test_environment_validation():
    with pytest.raises(ValueError, match="at least 2"):
        EnvironmentSpec(bounds=(0, 0, 1, 1), base_stations=[BaseStation(0, (0.5, 0.5))])
    with pytest.raises(ValueError, match="outside"):
        EnvironmentSpec(
            bounds=(0, 0, 1, 1),
            base_stations=[BaseStation(0, (0.5, 0.5)), BaseStation(1, (2.0, 0.5))],
        )
    with pytest.raises(ValueError, match="zero-length"):
        EnvironmentSpec(
            bounds=(0, 0, 1, 1),
            base_stations=[BaseStation(0, (0.2, 0.5)), BaseStation(1, (0.8, 0.5))],
            walls=[Wall((0.5, 0.5), (0.5, 0.5))],
        )
