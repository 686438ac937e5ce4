"""Tests for the beacon-flooding simulation"""

import pandas as pd
import pytest

from bsid_cli.core.errors import InvalidArgument
from bsid_cli.sim import (
    PRESETS, SimConfig, baseline_scenario, dos_calibration, dos_magnitude, export_metrics,
    fourteen_day_bytes, preset_config, run_scenario,
)
from bsid_cli.sim.presets import PRESET_TARGETS
from bsid_cli.sim.simnet import CSV_COLUMNS


def small(**overrides) -> SimConfig:
    base = dict(duration=60, attacker_count=1, honest_count=2, sample_interval=30, rng_seed=5)
    return SimConfig.parse({**base, **overrides})


def conserved(row) -> bool:
    return row.received == row.pending + row.verified + row.rejected


class TestConfig:
    @pytest.mark.parametrize('overrides', [
        {'epoch': 7},
        {'verification_delay': 300},
        {'duration': 86400},
        {'reception_rate': 1.5},
        {'attacker_count': -1},
        {'unknown_field': 1},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(InvalidArgument):
            SimConfig.parse(overrides)

    def test_defaults(self):
        cfg = SimConfig()
        assert cfg.epoch == 300
        assert cfg.sync_error == 10
        assert cfg.attacker_interval == 20.0
        assert cfg.end_time == cfg.duration + 602

    def test_from_file(self, tmp_path):
        path = tmp_path / 'scenario.json'
        path.write_text('{"duration": 120, "attacker_count": 3}', encoding='utf-8')
        cfg = SimConfig.from_file(path)
        assert (cfg.duration, cfg.attacker_count) == (120, 3)
        path.write_text('{"duration": -1}', encoding='utf-8')
        with pytest.raises(InvalidArgument):
            SimConfig.from_file(path)

    def test_presets(self):
        assert set(PRESETS) == set(PRESET_TARGETS)
        cfg = preset_config('crowd-1.0m', rng_seed=3)
        assert cfg.attacker_count == 6
        assert cfg.rng_seed == 3
        with pytest.raises(InvalidArgument):
            preset_config('stadium')


class TestVerifiedMode:
    def test_lone_attacker_never_verified(self):
        metrics = run_scenario(SimConfig.parse({'duration': 1800, 'attacker_count': 1, 'honest_count': 0}))
        (receiver,) = metrics.receivers
        assert receiver.received == 90_000
        assert receiver.received_from_attackers == 90_000
        assert receiver.verified == 0
        assert receiver.stored_records == 0
        assert receiver.rejected + receiver.expired + receiver.unsafe == 90_000
        assert metrics.reduction_rate == 1.0

    def test_honest_devices_verified(self):
        metrics = run_scenario(small(attacker_count=0, duration=600))
        for receiver in metrics.receivers:
            assert receiver.honest_verified == 2
            assert receiver.verified_from_attackers == 0
            assert receiver.rejected == receiver.unsafe == receiver.expired == 0
        assert metrics.reduction_rate is None

    def test_honest_device_does_not_hear_itself(self):
        metrics = run_scenario(small(attacker_count=0, honest_count=1))
        assert metrics.receivers[0].received == 0

    @pytest.mark.parametrize('rate', [0.1, 0.5, 1.0])
    def test_reduction_rate(self, rate):
        metrics = run_scenario(small(duration=120, reception_rate=rate))
        assert metrics.verified_from_attackers == 0
        assert metrics.reduction_rate >= 0.9

    def test_samples_conserve_counts(self):
        metrics = run_scenario(small())
        assert len(metrics.samples) == 2 * int(metrics.config.end_time // 30)
        assert all(conserved(sample) for sample in metrics.samples)
        last = metrics.samples[-1]
        assert last.pending == 0

    def test_deterministic(self):
        assert run_scenario(small()).model_dump() == run_scenario(small()).model_dump()
        assert run_scenario(small()).samples != run_scenario(small(rng_seed=6)).samples


class TestBaselineMode:
    def test_every_received_id_stored(self):
        metrics = baseline_scenario(small())
        for receiver in metrics.receivers:
            assert receiver.stored_records == receiver.received
            assert receiver.stored_bytes == 36 * receiver.received
            assert receiver.verified_from_attackers == receiver.received_from_attackers
        assert metrics.reduction_rate <= 0.0

    def test_same_attacker_stream_as_verified_mode(self):
        cfg = small(reception_rate=0.4)
        assert (baseline_scenario(cfg).received_from_attackers
                == run_scenario(cfg).received_from_attackers)


class TestExport:
    def test_csv_rows(self, tmp_path):
        metrics = run_scenario(small())
        path = tmp_path / 'metrics.csv'
        assert export_metrics(metrics, path) == len(metrics.samples)
        frame = pd.read_csv(path)
        assert list(frame.columns) == CSV_COLUMNS
        assert (frame.received == frame.pending + frame.verified + frame.rejected).all()

    def test_header_only_without_samples(self, tmp_path):
        metrics = run_scenario(small(sample_interval=10_000))
        path = tmp_path / 'metrics.csv'
        assert export_metrics(metrics, path) == 0
        assert path.read_text().strip() == ','.join(CSV_COLUMNS)


class TestDosMagnitude:
    def test_full_beacon_frame_by_default(self):
        assert dos_magnitude(1, 36, 1) == dos_magnitude(1, 36, 1, frame_bytes=31) == 522_580_645
        assert dos_magnitude(1, 16, 1) == 232_258_065

    @pytest.mark.parametrize('name, low, high', [
        ('raw-id', 450_000_000, 900_000_000),
        ('full-record', 1_000_000_000, 2_000_000_000),
    ])
    def test_calibrated_hourly_band(self, name, low, high):
        params = dos_calibration(name)
        assert dos_magnitude(1, hours=1, **params) == low
        assert dos_magnitude(2, hours=1, **params) == high
        for mbps in (1.0, 1.25, 1.5, 1.75, 2.0):
            assert low <= dos_magnitude(mbps, hours=1, **params) <= high

    def test_calibrated_eight_hour_day(self):
        params = dos_calibration('full-record')
        assert dos_magnitude(1, hours=8, **params) == 8_000_000_000
        assert dos_magnitude(2, hours=8, **params) == 16_000_000_000

    def test_unknown_calibration(self):
        with pytest.raises(InvalidArgument):
            dos_calibration('bluetooth-6')

    def test_scales_linearly(self):
        assert dos_magnitude(1, 36, 8, frame_bytes=16) == 8_100_000_000
        assert dos_magnitude(1, 36, 1, efficiency=0.5) == pytest.approx(dos_magnitude(1, 36, 1) / 2, abs=1)
        assert dos_magnitude(0, 36, 5) == 0
        assert dos_magnitude(1, 36, 0) == 0

    @pytest.mark.parametrize('kwargs', [
        {'bandwidth_mbps': -1}, {'hours': -1}, {'frame_bytes': 0}, {'efficiency': 0}, {'efficiency': 1.5},
    ])
    def test_invalid(self, kwargs):
        args = {'bandwidth_mbps': 1, 'record_bytes': 36, 'hours': 1, **kwargs}
        with pytest.raises(InvalidArgument):
            dos_magnitude(**args)

    def test_fourteen_day_storage(self):
        assert fourteen_day_bytes(1_226_880) == 652_700_160
        assert fourteen_day_bytes(1_891_008) == 1_006_016_256


class TestPresets:
    @pytest.mark.slow
    @pytest.mark.parametrize('name, fourteen_days', [
        ('single-attacker', None),
        ('multi-attacker-2', 645e6),
        ('multi-attacker-4', 1.076e9),
    ])
    def test_attacker_presets(self, name, fourteen_days):
        cfg = preset_config(name)
        target = PRESET_TARGETS[name]
        baseline = baseline_scenario(cfg)
        for receiver in baseline.receivers:
            assert receiver.verified_from_attackers == pytest.approx(target, rel=0.15)
            if fourteen_days is not None:
                assert fourteen_day_bytes(receiver.stored_records) == pytest.approx(fourteen_days, rel=0.15)
        verified = run_scenario(cfg)
        assert verified.verified_from_attackers == 0
        assert verified.received_from_attackers == baseline.received_from_attackers

    @pytest.mark.slow
    @pytest.mark.parametrize('name', ['crowd-0.5m', 'crowd-1.0m', 'crowd-1.5m'])
    def test_crowd_presets(self, name):
        metrics = run_scenario(preset_config(name))
        target = PRESET_TARGETS[name]
        for receiver in metrics.receivers:
            assert receiver.received_from_attackers == pytest.approx(target, rel=0.2)
        assert metrics.reduction_rate >= 0.93
