import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bistatic_isac.detect import DetectorConfig, find_local_peaks, partition_peaks, select_candidates
from bistatic_isac.doppler import CellPeak, DelayDopplerMap
from bistatic_isac.errors import ConfigError


def _peak(delay, power, doppler=3, aoa=0):
    return CellPeak(delay, doppler, aoa, power)


def _map(P):
    P = np.asarray(P, dtype=float)
    return DelayDopplerMap(P, np.where(np.isfinite(P), 0, -1))


# partition

def test_partition_examples():
    cfg = DetectorConfig(region_length=8, region_count=2, per_region_top=1, global_top=1)
    regions = partition_peaks([_peak(5, 1.0)], cfg, 16)
    assert [len(r) for r in regions] == [1, 0]
    regions = partition_peaks([_peak(7, 1.0), _peak(8, 1.0)], cfg, 16)
    assert [r[0].delay_bin for r in regions] == [7, 8]


def test_partition_matches_bucketing(rng):
    cfg = DetectorConfig(region_length=10, per_region_top=2, global_top=4)
    peaks = [_peak(int(d), float(p)) for d, p in zip(rng.integers(0, 100, 300), rng.random(300))]
    regions = partition_peaks(peaks, cfg, 100)
    expected = {}
    for p in peaks:
        expected.setdefault(p.delay_bin // 10, []).append(p)
    for i, r in enumerate(regions):
        assert sorted(r, key=id) == sorted(expected.get(i, []), key=id)


def test_partition_drops_tail_beyond_last_region():
    cfg = DetectorConfig(region_length=16, region_count=2, per_region_top=1, global_top=1)
    assert sum(map(len, partition_peaks([_peak(40, 1.0)], cfg, 64))) == 0


@pytest.mark.parametrize("kw", [
    dict(region_length=16, region_count=40),  # m * Nc > Ts
    dict(region_length=0),
    dict(per_region_top=0),
    dict(global_top=0),
    dict(region_length=16, region_count=2, per_region_top=2, global_top=5),  # U > k * Nc
])
def test_config_checked_against_ts(kw):
    with pytest.raises(ConfigError):
        DetectorConfig(**kw).regions(512)


def test_default_regions():
    assert DetectorConfig().regions(512) == 32


# threshold

def test_threshold_relative_to_floor():
    cfg = DetectorConfig(threshold_db=12)
    assert cfg.power_threshold(2.0) == pytest.approx(2.0 * 10 ** 1.2)
    assert DetectorConfig(threshold_linear=7.0).power_threshold(2.0) == 7.0
    # a silent map cannot push the threshold below the dynamic-range floor
    assert cfg.power_threshold(0.0, reference_power=1e6) == pytest.approx(1e6 * 1e-10)


# local peaks

def test_local_peaks_match_loop(rng):
    for _ in range(20):
        P = rng.integers(0, 4, (12, 9)).astype(float)
        P[:, 4] = -np.inf
        got = {(p.delay_bin, p.doppler_bin) for p in find_local_peaks(_map(P))}
        assert got == oracles.local_peaks_loop(P)


def test_plateau_collapses_to_first_cell():
    P = np.zeros((4, 4))
    P[1:3, 1:3] = 5.0
    peaks = find_local_peaks(_map(P))
    assert [(p.delay_bin, p.doppler_bin) for p in peaks] == [(1, 1)]


def test_guarded_cells_never_peak():
    P = np.full((3, 3), -np.inf)
    assert find_local_peaks(_map(P)) == []


# selection

def test_single_peak_above_threshold():
    cfg = DetectorConfig(region_length=4, region_count=2, per_region_top=2, global_top=2)
    out = select_candidates(partition_peaks([_peak(1, 5.0)], cfg, 8), cfg, threshold=1.0, timestamp=0.3)
    assert [(d.delay_bin, d.power, d.timestamp) for d in out] == [(1, 5.0, 0.3)]


def test_all_below_threshold_is_empty():
    cfg = DetectorConfig(region_length=4, region_count=2, per_region_top=2, global_top=2)
    regions = partition_peaks([_peak(1, 0.5), _peak(6, 0.9)], cfg, 8)
    assert select_candidates(regions, cfg, threshold=1.0) == []


def test_threshold_is_strict():
    cfg = DetectorConfig(region_length=4, region_count=1, per_region_top=1, global_top=1)
    assert select_candidates([[_peak(1, 1.0)]], cfg, threshold=1.0) == []


def test_three_regions_with_ties():
    cfg = DetectorConfig(region_length=4, region_count=3, per_region_top=2, global_top=3)
    regions = [
        [_peak(0, 5.0, 2), _peak(1, 9.0, 5), _peak(2, 9.0, 1), _peak(3, 1.0)],
        [_peak(4, 7.0), _peak(5, 9.0, 0), _peak(6, 2.0), _peak(7, 7.0, 1)],
        [_peak(8, 9.0), _peak(9, 3.0), _peak(10, 3.0), _peak(11, 9.0, 9)],
    ]
    out = select_candidates(regions, cfg, threshold=0.0)
    # per region: (9@1, 9@2), (9@5, 7@4), (9@8, 9@11); global by power then delay
    assert [(d.power, d.delay_bin) for d in out] == [(9.0, 1), (9.0, 2), (9.0, 5)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 6))
def test_cardinality_and_determinism(seed, k, U):
    rng = np.random.default_rng(seed)
    P = rng.integers(0, 5, (24, 8)).astype(float)
    cfg = DetectorConfig(region_length=8, per_region_top=k, global_top=min(U, 3 * k))
    regions = partition_peaks(find_local_peaks(_map(P)), cfg, 24)
    a = select_candidates(regions, cfg, 1.0)
    b = select_candidates(regions, cfg, 1.0)
    assert a == b
    assert len(a) <= min(cfg.global_top, k * 3)
    assert all(d.power > 1.0 for d in a)
    assert [d.power for d in a] == sorted((d.power for d in a), reverse=True)
    want = oracles.select_oracle(P, 8, k, cfg.global_top, 1.0)
    assert [(d.power, d.delay_bin, d.doppler_bin) for d in a] == want


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.floats(0, 10), min_size=2, max_size=6))
def test_threshold_monotone(seed, thresholds):
    rng = np.random.default_rng(seed)
    P = rng.random((32, 8)) * 10
    cfg = DetectorConfig(region_length=8, per_region_top=2, global_top=5)
    regions = partition_peaks(find_local_peaks(_map(P)), cfg, 32)
    sets = [{(d.delay_bin, d.doppler_bin) for d in select_candidates(regions, cfg, t)} for t in sorted(thresholds)]
    assert all(b <= a for a, b in zip(sets, sets[1:]))
