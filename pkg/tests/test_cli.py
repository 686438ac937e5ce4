"""Command-line tests driven through click's CliRunner"""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from bsid_cli.cli import cli

DAY = '19000'


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def data_dir(tmp_path):
    return str(tmp_path / 'data')


def invoke(runner, data_dir, *args, seed=None):
    base = ['--data-dir', data_dir]
    if seed is not None:
        base += ['--seed', str(seed)]
    return runner.invoke(cli, base + list(args))


def last_json(output: str) -> dict:
    """The JSON object in mixed output (progress bars go to stderr)"""
    return json.loads(output[output.index('{'):output.rindex('}') + 1])


class TestDosCalc:
    def test_eight_hours_at_one_mbps(self, runner, data_dir):
        result = invoke(runner, data_dir, 'dos-calc', '--mbps', '1', '--hours', '8', '--frame-bytes', '16')
        assert result.exit_code == 0, result.output
        assert '8.100 GB' in result.output

    def test_full_beacon_frame_default(self, runner, data_dir):
        result = invoke(runner, data_dir, 'dos-calc', '--mbps', '1', '-o', 'json')
        assert result.exit_code == 0, result.output
        data = json.loads(result.output)
        assert data['frame_bytes'] == 31
        assert data['total_bytes'] == 522_580_645

    def test_calibration(self, runner, data_dir):
        result = invoke(runner, data_dir, 'dos-calc', '--mbps', '2', '--hours', '8', '--calibration',
                        'full-record', '-o', 'json')
        assert result.exit_code == 0, result.output
        data = json.loads(result.output)
        assert data['bytes_per_hour'] == 2_000_000_000
        assert data['total_bytes'] == 16_000_000_000

    def test_json_output(self, runner, data_dir):
        result = invoke(runner, data_dir, 'dos-calc', '--mbps', '2', '--calibration', 'raw-id', '-o', 'json')
        assert result.exit_code == 0, result.output
        data = json.loads(result.output)
        assert data['total_bytes'] == 900_000_000

    def test_rejects_zero_efficiency(self, runner, data_dir):
        result = invoke(runner, data_dir, 'dos-calc', '--mbps', '1', '--efficiency', '0')
        assert result.exit_code == 2


class TestSimulate:
    def test_config_file_to_csv(self, runner, data_dir, tmp_path):
        scenario = tmp_path / 'scenario.json'
        scenario.write_text(json.dumps({'duration': 30, 'attacker_count': 1, 'honest_count': 0,
                                        'sample_interval': 10}), encoding='utf-8')
        out = tmp_path / 'metrics.csv'
        summary = tmp_path / 'summary.json'
        result = invoke(runner, data_dir, 'simulate', '--config', str(scenario), '--out', str(out),
                        '--summary-out', str(summary), seed=4)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert len(frame) == int((30 + 602) // 10)
        assert (frame.received == frame.pending + frame.verified + frame.rejected).all()
        assert frame.verified.max() == 0
        assert json.loads(summary.read_text(encoding='utf-8'))[0]['received'] == frame.received.iloc[-1]
        assert '100.00%' in result.output

    def test_invalid_config(self, runner, data_dir, tmp_path):
        scenario = tmp_path / 'scenario.json'
        scenario.write_text('{"epoch": 7}', encoding='utf-8')
        result = invoke(runner, data_dir, 'simulate', '--config', str(scenario))
        assert result.exit_code != 0
        assert '시나리오 설정 오류' in result.output

    def test_config_and_preset_exclusive(self, runner, data_dir, tmp_path):
        scenario = tmp_path / 'scenario.json'
        scenario.write_text('{}', encoding='utf-8')
        result = invoke(runner, data_dir, 'simulate', '--config', str(scenario), '--preset', 'crowd-1.0m')
        assert result.exit_code != 0

    def test_unknown_command(self, runner, data_dir):
        assert invoke(runner, data_dir, 'frobnicate').exit_code == 2


class TestProtocolFlow:
    def test_register_requires_keys(self, runner, data_dir):
        result = invoke(runner, data_dir, 'register', '--identity', 'alice', '--day', DAY)
        assert result.exit_code != 0
        assert 'keygen' in result.output

    def test_bad_identity(self, runner, data_dir):
        assert invoke(runner, data_dir, 'keygen', '--day', DAY, '--modulus-bits', '512', seed=1).exit_code == 0
        result = invoke(runner, data_dir, 'register', '--identity', 'a/b', '--day', DAY)
        assert result.exit_code != 0

    def test_bad_signer_address(self, runner, data_dir):
        result = invoke(runner, data_dir, 'register', '--identity', 'alice', '--signer', 'nowhere')
        assert result.exit_code == 2

    def test_register_to_tally(self, runner, data_dir, tmp_path):
        def ok(*args, seed=None):
            result = invoke(runner, data_dir, *args, seed=seed)
            assert result.exit_code == 0, result.output
            return result.output

        ok('keygen', '--day', DAY, '--modulus-bits', '512', seed=1)
        ok('register', '--identity', 'alice', '--day', DAY, '--sets', '3', '--count', '4', seed=2)
        ok('register', '--identity', 'bob', '--day', DAY, '--sets', '3', '--count', '4', seed=3)

        again = invoke(runner, data_dir, 'register', '--identity', 'alice', '--day', DAY, '--sets', '3',
                       '--count', '4', seed=4)
        assert again.exit_code != 0
        assert '이미 등록' in again.output

        output = ok('authenticate', '--identity', 'alice', '--day', DAY, '--prefix-bits', '01', '-o', 'json',
                    seed=5)
        assert last_json(output)['downloaded'] == 4

        auth_file = next((tmp_path / 'data' / 'credentials').glob('alice-day-*.auth.json'))
        before = auth_file.read_text(encoding='utf-8')
        repeat = invoke(runner, data_dir, 'authenticate', '--identity', 'alice', '--day', DAY,
                        '--prefix-bits', '01')
        assert repeat.exit_code != 0
        assert auth_file.read_text(encoding='utf-8') == before

        output = ok('receive', '--identity', 'bob', '--from', 'alice', '--day', DAY, '-o', 'json')
        summary = last_json(output)
        assert summary['verified'] == summary['stored'] == 4
        assert summary['rejected'] == 0

        ok('report-positive', '--identity', 'alice', '--symptom-day', DAY, '--report-day', DAY)
        output = ok('check-exposure', '--identity', 'bob', '--post-match', '--max-cases', '16', seed=6)
        assert 'FinalTrial' in output

        quiet = ok('check-exposure', '--identity', 'alice')
        assert '노출 기록이 없습니다' in quiet or '접촉 기록이 없습니다' in quiet

        output = ok('tally', '--day', DAY, '--case', '1', '--threshold', '0', '-o', 'json')
        row = last_json(output)
        assert row['Matches'] == 1
        assert row['Status'] == 'suspicious'

        output = ok('tally', '--day', DAY, '--case', '1', '-o', 'json')
        assert last_json(output)['Status'] == 'normal'
