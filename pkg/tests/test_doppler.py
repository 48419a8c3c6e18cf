import csv
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bistatic_isac.channel import array_response, synthesize_capture, synthesize_packet
from bistatic_isac.doppler import (AoaGrid, DopplerCube, aoa_power_map, aoa_power_search, doppler_transform,
                                   guard_mask, steering_matrix, steering_vector, write_power_map_csv)
from bistatic_isac.errors import ConfigError, WindowIncomplete
from bistatic_isac.preprocess import DifferentialChannel, PreprocConfig, preprocess_window
from bistatic_isac.scene import (SPEED_OF_LIGHT, ClutterPath, Position3, Scene, TargetSpec,
                                 unit_vector)

GRID = AoaGrid.from_degrees()
TX = Position3(-80.0, -90.0, 10.0)


def _seq(values, first=1):
    return [DifferentialChannel(first + t, v) for t, v in enumerate(values)]


# grid and steering

def test_default_grid_shape():
    assert (GRID.azimuths.size, GRID.elevations.size) == (61, 31)
    assert np.rad2deg(GRID.azimuths[[0, -1]]) == pytest.approx([-60, 60])
    assert np.rad2deg(GRID.elevations[[0, -1]]) == pytest.approx([-30, 30])
    az, el = GRID.angles(5 * 31 + 7)
    assert (math.degrees(az), math.degrees(el)) == pytest.approx((-50, -16))


def test_grid_validation():
    with pytest.raises(ConfigError):
        AoaGrid(np.array([]), np.array([0.0]))
    with pytest.raises(ConfigError):
        AoaGrid(np.array([0.0, 0.0]), np.array([0.0]))
    with pytest.raises(IndexError):
        GRID.angles(len(GRID))


def test_boresight_steering_is_ones(desk):
    boresight = 30 * 31 + 15
    assert GRID.angles(boresight) == (0.0, 0.0)
    assert np.allclose(steering_vector(desk, GRID, boresight), 1.0)


def test_steering_unit_modulus(desk):
    assert np.allclose(np.abs(steering_matrix(desk, GRID)), 1.0)


def test_steering_matches_simulator_response(desk):
    # the search and the forward model must agree on the array geometry
    S = steering_matrix(desk, GRID)
    az, el = GRID.all_angles()
    for g in (0, 77, 1000, len(GRID) - 1):
        assert np.allclose(S[g], array_response(desk, unit_vector(az[g], el[g])))


def test_single_path_snapshot_peaks_at_true_angle(desk):
    S = steering_matrix(desk, GRID)
    az, el = GRID.all_angles()
    for g in (130, 900, 1500):
        scene = Scene(TX, clutter_paths=(ClutterPath(300 / SPEED_OF_LIGHT, 1.0, az[g], el[g]),),
                      sync_offsets_enabled=False)
        cell = synthesize_packet(scene, desk, 0).samples[17]
        assert oracles.grid_search_loop(cell, S)[0] == g


# Doppler transform

def test_constant_sequence_all_at_dc(rng):
    v = rng.standard_normal((5, 3)) + 0j
    cube = doppler_transform(_seq([v] * 8), 0.005)
    assert cube.values.shape == (5, 3, 8)
    assert np.allclose(cube.values[:, :, 4], 8 * v)
    assert np.allclose(np.delete(cube.values, 4, axis=2), 0)
    assert cube.bin_spacing == pytest.approx(1 / (8 * 0.005))


@pytest.mark.parametrize("k", [1, 3, -2, -4])
def test_basis_sequence_single_bin(k):
    T = 8
    seq = _seq([np.full((2, 2), np.exp(2j * np.pi * k * t / T)) for t in range(T)])
    cube = doppler_transform(seq, 0.005)
    mag = np.abs(cube.values[0, 0])
    assert int(np.argmax(mag)) - T // 2 == k
    assert np.count_nonzero(mag > 1e-9) == 1
    assert cube.frequency(T // 2 + k) == pytest.approx(k * cube.bin_spacing)


def test_missing_packet_rejected():
    seq = _seq([np.ones((2, 2))] * 4)
    del seq[2]
    with pytest.raises(WindowIncomplete):
        doppler_transform(seq, 0.005)
    with pytest.raises(WindowIncomplete):
        doppler_transform(_seq([np.ones((2, 2))]), 0.005)
    with pytest.raises(WindowIncomplete):
        doppler_transform(_seq([np.ones((2, 2))] * 4), 0.005, expected_length=5)


def test_unknown_window_rejected():
    with pytest.raises(ConfigError):
        doppler_transform(_seq([np.ones((2, 2))] * 4), 0.005, window="kaiser")


def test_hann_window_lowers_far_sidelobes():
    T = 32
    f = 5.5  # between bins: worst case for leakage
    seq = _seq([np.full((1, 1), np.exp(2j * np.pi * f * t / T)) for t in range(T)])
    rect = np.abs(doppler_transform(seq, 0.005).values[0, 0])
    hann = np.abs(doppler_transform(seq, 0.005, window="hann").values[0, 0])
    far = T // 2 - 8  # eight bins from DC, far from the tone
    assert hann[far] / hann.max() < rect[far] / rect.max()


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(-50, 50), st.integers(0, 2**32 - 1))
def test_shift_theorem(T, k, seed):
    rng = np.random.default_rng(seed)
    base = [rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)) for _ in range(T)]
    ramp = np.exp(2j * np.pi * k * np.arange(T) / T)
    a = doppler_transform(_seq(base), 0.005).values
    b = doppler_transform(_seq([x * r for x, r in zip(base, ramp)]), 0.005).values
    assert np.allclose(b, np.roll(a, k, axis=-1), rtol=0, atol=1e-12 * np.abs(a).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_power_conservation(T, seed):
    rng = np.random.default_rng(seed)
    base = [rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)) for _ in range(T)]
    cube = doppler_transform(_seq(base), 0.005).values
    lhs = np.sum(np.abs(cube) ** 2, axis=-1)
    rhs = T * np.sum(np.abs(np.stack(base, -1)) ** 2, axis=-1)
    assert np.allclose(lhs, rhs, rtol=1e-9)


# AOA search

def test_guard_mask():
    assert guard_mask(8, 0).tolist() == [True] * 4 + [False] + [True] * 3
    assert guard_mask(8, 2).tolist() == [True, True, False, False, False, False, False, True]
    with pytest.raises(ConfigError):
        guard_mask(8, -1)


def _cube_from_cells(cells):
    return DopplerCube(np.asarray(cells), 1.0)


def test_matched_filter_power(desk):
    amp = 0.7 - 0.2j
    j = 411
    values = np.zeros((2, desk.num_antennas, 8), dtype=complex)
    values[1, :, 6] = amp * steering_vector(desk, GRID, j)
    m = aoa_power_map(_cube_from_cells(values), GRID, desk, guard=1)
    assert m.aoa_id[1, 6] == j
    assert m.power[1, 6] == pytest.approx(desk.num_antennas ** 2 * abs(amp) ** 2)


def test_guarded_cells_absent(desk, rng):
    values = rng.standard_normal((3, desk.num_antennas, 8)) + 0j
    peaks = aoa_power_search(_cube_from_cells(values), GRID, desk, guard=2)
    assert {p.doppler_bin for p in peaks} == {0, 1, 7}
    assert len(peaks) == 3 * 3
    assert all(p.power >= 0 and 0 <= p.aoa_id < len(GRID) for p in peaks)


def test_random_cells_match_exhaustive_scan(desk, rng):
    grid = AoaGrid.from_degrees(-20, 20, -10, 10, 5)
    values = rng.standard_normal((4, desk.num_antennas, 6)) + 1j * rng.standard_normal((4, desk.num_antennas, 6))
    S = steering_matrix(desk, grid)
    m = aoa_power_map(_cube_from_cells(values), grid, desk, guard=0)
    for d in range(4):
        for f in (0, 1, 2, 4, 5):
            g, p = oracles.grid_search_loop(values[d, :, f], S)
            assert m.aoa_id[d, f] == g
            assert m.power[d, f] == pytest.approx(p, rel=1e-12)
    assert m.aoa_id[0, 3] == -1 and m.power[0, 3] == -np.inf


def test_antenna_count_must_match(desk):
    with pytest.raises(ConfigError):
        aoa_power_map(_cube_from_cells(np.zeros((1, 3, 4), dtype=complex)), GRID, desk)


def test_power_map_csv(tmp_path, desk, rng):
    values = rng.standard_normal((2, desk.num_antennas, 4)) + 0j
    m = aoa_power_map(_cube_from_cells(values), GRID, desk, guard=0)
    path = tmp_path / "map.csv"
    write_power_map_csv(path, m)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 2 * 3
    assert {int(r["doppler_bin"]) for r in rows} == {-2, -1, 1}


# through the simulator

def _target_map(desk, reflectivity, direction=None, T=16, snr_db=None):
    """Delay-Doppler map of one radially moving target (fixed arrival direction).

    The direct path is included: alignment needs a dominant static path, and
    without one it would rotate the target itself onto the reference.
    """
    az, el = direction or (math.radians(10), math.radians(-6))
    u = unit_vector(az, el)
    start = 60.0 * u
    tgt = TargetSpec(Position3.of(start), tuple(3.0 * u), reflectivity)
    scene = Scene(TX, (tgt,), sync_offsets_enabled=True)
    scene = dataclasses.replace(scene, clutter_paths=(scene.direct_path(1.0),)).with_snr(snr_db)
    cap = synthesize_capture(scene, desk, T + 1, seed=3)
    pre = PreprocConfig()
    cube = doppler_transform(preprocess_window(cap.packets, pre), desk.packet_period)
    return aoa_power_map(cube, GRID, desk, guard=2)


def test_energy_scales_with_reflectivity_squared(desk):
    a = _target_map(desk, 0.05)
    b = _target_map(desk, 0.10)
    peak = np.unravel_index(np.argmax(np.where(a.searched, a.power, -np.inf)), a.power.shape)
    assert np.argmax(np.where(b.searched, b.power, -np.inf)) == np.ravel_multi_index(peak, a.power.shape)
    # alignment is fitted on data that contains the target, so linearity holds to first order only
    assert b.power[peak] / a.power[peak] == pytest.approx(4.0, rel=0.02)


@pytest.mark.parametrize("az_deg,el_deg", [(10, -6), (-40, 12), (24, 0), (-2, -28)])
def test_true_angle_wins_at_20db(desk, az_deg, el_deg):
    m = _target_map(desk, 0.05, (math.radians(az_deg), math.radians(el_deg)), snr_db=20)
    d, f = np.unravel_index(np.argmax(np.where(m.searched, m.power, -np.inf)), m.power.shape)
    az, el = GRID.angles(int(m.aoa_id[d, f]))
    assert (round(math.degrees(az)), round(math.degrees(el))) == (az_deg, el_deg)
