"""Main CLI module for BlindSignedID CLI"""

import logging
import sys
import time

import click
from typing import Optional, Tuple
from .config import Config
from .core.tesla_service import day_of
from .core.ephid_gen import DEFAULT_EPHIDS_PER_DAY, DEFAULT_SET_COUNT
from .core.crypto_core import DEFAULT_MODULUS_BITS
from .core.exposure import DEFAULT_MAX_CASES, DEFAULT_THRESHOLD
from .sim.presets import DOS_CALIBRATIONS, PRESETS
from .commands import (
    keygen_cmd, register_cmd, signer_serve_cmd, authenticate_cmd, tesla_serve_cmd, receive_cmd,
    report_positive_cmd, check_exposure_cmd, tally_cmd, simulate_cmd, dos_calc_cmd,
)


def _parse_address(ctx, param, value: Optional[str]) -> Optional[Tuple[str, int]]:
    if value is None:
        return None
    host, sep, port = value.rpartition(':')
    if not sep or not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise click.BadParameter("HOST:PORT 형식이어야 합니다 (예: 127.0.0.1:7700)")
    return host, int(port)


def _today() -> int:
    return day_of(time.time())


output_format_option = click.option('--output-format', '-o', type=click.Choice(['table', 'json']),
                                    default='table', help='출력 형식')


@click.group()
@click.option('--data-dir', envvar='BSID_DATA_DIR', help='키, 자격 증명, 저장소 파일 디렉토리 (기본값: ./bsid-data)')
@click.option('--seed', type=int, envvar='BSID_SEED', help='재현 가능한 실행을 위한 난수 시드')
@click.option('--verbose', '-v', is_flag=True, help='디버그 로그 출력')
@click.pass_context
def cli(ctx, data_dir: Optional[str], seed: Optional[int], verbose: bool):
    """BlindSignedID CLI - 블라인드 서명 EphID 접촉 추적 도구"""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    ctx.ensure_object(dict)
    ctx.obj['config'] = Config(data_dir=data_dir, seed=seed)


@cli.command('keygen')
@click.option('--day', 'day_index', type=int, default=None, help='키를 만들 day 인덱스 (기본값: 오늘)')
@click.option('--modulus-bits', default=DEFAULT_MODULUS_BITS, type=click.IntRange(128, 8192),
              help=f'RSA 모듈러스 비트 수 (기본값: {DEFAULT_MODULUS_BITS})')
@click.option('--finaltrial/--no-finaltrial', default=True, help='FinalTrial 일일 키도 생성')
@output_format_option
@click.pass_context
def keygen(ctx, day_index: Optional[int], modulus_bits: int, finaltrial: bool, output_format: str):
    """서명자 일일 키, FinalTrial 키, TESLA 체인 앵커 생성

    \b
    예시:
      # 오늘 날짜 키 생성
      bsid keygen

      # 재현 가능한 테스트용 작은 키
      bsid --seed 7 keygen --day 19000 --modulus-bits 512
    """
    config = ctx.obj['config']
    keygen_cmd.generate_keys(config, _today() if day_index is None else day_index, modulus_bits,
                             finaltrial, output_format)


@cli.command('register')
@click.option('--identity', required=True, help='등록할 사용자 신원 (전화번호, 이메일 등)')
@click.option('--day', 'day_index', type=int, default=None, help='등록할 day 인덱스 (기본값: 오늘)')
@click.option('--sets', 'set_count', default=DEFAULT_SET_COUNT, type=click.IntRange(1, 0xFFFF),
              help=f'cut-and-choose 세트 수 M (기본값: {DEFAULT_SET_COUNT})')
@click.option('--count', 'ephid_count', default=DEFAULT_EPHIDS_PER_DAY, type=click.IntRange(1, 0xFFFF),
              help=f'세트당 EphID 수 n (기본값: {DEFAULT_EPHIDS_PER_DAY})')
@click.option('--signer', 'signer_address', callback=_parse_address,
              help='원격 서명자 주소 HOST:PORT (생략 시 로컬 키로 서명)')
@click.pass_context
def register(ctx, identity: str, day_index: Optional[int], set_count: int, ephid_count: int,
             signer_address: Optional[Tuple[str, int]]):
    """블라인드 서명 등록 프로토콜 실행 후 자격 증명 저장

    \b
    예시:
      # 로컬 서명자로 등록
      bsid register --identity alice@example.com

      # 원격 서명자에 등록
      bsid register --identity alice@example.com --signer 10.0.0.5:7700
    """
    config = ctx.obj['config']
    register_cmd.register(config, identity, _today() if day_index is None else day_index, set_count,
                          ephid_count, signer_address)


@cli.command('signer-serve')
@click.option('--host', default='127.0.0.1', help='바인드 주소')
@click.option('--port', default=7700, type=click.IntRange(0, 65535), help='TCP 포트 (기본값: 7700)')
@click.pass_context
def signer_serve(ctx, host: str, port: int):
    """등록 서명자를 TCP 서버로 실행

    \b
    예시:
      bsid signer-serve --host 0.0.0.0 --port 7700
    """
    config = ctx.obj['config']
    signer_serve_cmd.serve(config, host, port)


@cli.command('authenticate')
@click.option('--identity', required=True, help='자격 증명을 가진 사용자 신원')
@click.option('--day', 'day_index', type=int, default=None, help='day 인덱스 (기본값: 오늘)')
@click.option('--method', type=click.Choice(['full', 'partial', 'individual']), default='partial',
              help='게시 목록 다운로드 방식')
@click.option('--prefix-bits', default='', help='nonce 공통 접두 비트열 (partial 다운로드용, 예: 0110)')
@output_format_option
@click.pass_context
def authenticate(ctx, identity: str, day_index: Optional[int], method: str, prefix_bits: str,
                 output_format: str):
    """MIX를 통해 서명된 EphID를 TESLA 인증자로 교환

    \b
    예시:
      # 접두 비트열을 사용한 부분 다운로드
      bsid authenticate --identity alice@example.com --prefix-bits 0110

      # 전체 목록 다운로드
      bsid authenticate --identity alice@example.com --method full
    """
    if any(bit not in '01' for bit in prefix_bits):
        raise click.BadParameter("0과 1로만 구성되어야 합니다", param_hint='--prefix-bits')
    config = ctx.obj['config']
    authenticate_cmd.authenticate(config, identity, _today() if day_index is None else day_index, method,
                                  prefix_bits, output_format)


@cli.command('tesla-serve')
@click.option('--host', default='127.0.0.1', help='바인드 주소')
@click.option('--port', default=7701, type=click.IntRange(0, 65535), help='UDP 포트 (기본값: 7701)')
@click.option('--day', 'day_index', type=int, default=None, help='공개할 체인의 day 인덱스 (기본값: 오늘)')
@click.pass_context
def tesla_serve(ctx, host: str, port: int, day_index: Optional[int]):
    """TESLA 키 공개 UDP 서버 실행 (t_i 이전에는 키를 공개하지 않음)

    \b
    예시:
      bsid tesla-serve --port 7701
    """
    config = ctx.obj['config']
    tesla_serve_cmd.serve(config, host, port, _today() if day_index is None else day_index)


@cli.command('receive')
@click.option('--identity', required=True, help='수신 기기 신원')
@click.option('--from', 'senders', multiple=True, required=True, help='비콘을 방송한 기기 신원 (여러 번 지정 가능)')
@click.option('--day', 'day_index', type=int, default=None, help='day 인덱스 (기본값: 오늘)')
@click.option('--key-server', callback=_parse_address, help='TESLA 키 공개 서버 HOST:PORT (생략 시 로컬 체인)')
@output_format_option
@click.pass_context
def receive(ctx, identity: str, senders: Tuple[str, ...], day_index: Optional[int],
            key_server: Optional[Tuple[str, int]], output_format: str):
    """다른 기기의 비콘을 수신 저장소에 재생하고 공개 키로 검증

    \b
    예시:
      # alice와 carol의 비콘을 bob의 저장소에 기록
      bsid receive --identity bob --from alice --from carol

      # 키 공개 서버에서 키를 받아 검증
      bsid receive --identity bob --from alice --key-server 127.0.0.1:7701
    """
    config = ctx.obj['config']
    receive_cmd.receive(config, identity, senders, _today() if day_index is None else day_index,
                        key_server, output_format)


@cli.command('report-positive')
@click.option('--identity', required=True, help='양성 판정 사용자 신원')
@click.option('--symptom-day', type=int, required=True, help='증상 발현 day 인덱스')
@click.option('--report-day', type=int, default=None, help='보고 day 인덱스 (기본값: 오늘)')
@output_format_option
@click.pass_context
def report_positive(ctx, identity: str, symptom_day: int, report_day: Optional[int], output_format: str):
    """감염 기간의 선택된 세트 시드를 게시판에 게시

    \b
    예시:
      bsid report-positive --identity alice@example.com --symptom-day 19000 --report-day 19003
    """
    config = ctx.obj['config']
    report_positive_cmd.report_positive(config, identity, symptom_day,
                                        _today() if report_day is None else report_day, output_format)


@cli.command('check-exposure')
@click.option('--identity', required=True, help='확인할 기기 신원')
@click.option('--post-match/--no-post-match', default=False, help='일치 시 FinalTrial 매치 게시')
@click.option('--max-cases', default=DEFAULT_MAX_CASES, type=click.IntRange(1),
              help=f'FinalTrial 코드 수 (기본값: {DEFAULT_MAX_CASES})')
@output_format_option
@click.pass_context
def check_exposure(ctx, identity: str, post_match: bool, max_cases: int, output_format: str):
    """검증된 접촉 기록과 양성 보고 비교

    \b
    예시:
      # 노출 여부 확인
      bsid check-exposure --identity bob

      # 일치하면 FinalTrial 매치까지 게시
      bsid check-exposure --identity bob --post-match
    """
    config = ctx.obj['config']
    check_exposure_cmd.check_exposure(config, identity, post_match, max_cases, output_format)


@cli.command('tally')
@click.option('--day', 'publication_day', type=int, required=True, help='양성 보고 게시 day')
@click.option('--case', 'case_number', type=click.IntRange(1), required=True, help='case 번호')
@click.option('--threshold', default=DEFAULT_THRESHOLD, type=click.IntRange(0),
              help=f'의심 판정 임계값 (기본값: {DEFAULT_THRESHOLD})')
@output_format_option
@click.pass_context
def tally(ctx, publication_day: int, case_number: int, threshold: int, output_format: str):
    """FinalTrial 매치 게시물 집계

    \b
    예시:
      bsid tally --day 19003 --case 1 --threshold 1000
    """
    config = ctx.obj['config']
    tally_cmd.tally(config, publication_day, case_number, threshold, output_format)


@cli.command('simulate')
@click.option('--config', 'scenario_file', type=click.Path(exists=True, dir_okay=False),
              help='시나리오 설정 JSON 파일')
@click.option('--preset', type=click.Choice(sorted(PRESETS)), help='미리 정의된 시나리오')
@click.option('--out', help='메트릭 CSV 출력 경로')
@click.option('--baseline', is_flag=True, help='검증 없이 모든 EphID를 저장하는 기준선 모드')
@click.option('--summary-out', help='수신기 요약 출력 경로 (.json 또는 .csv)')
@output_format_option
@click.pass_context
def simulate(ctx, scenario_file: Optional[str], preset: Optional[str], out: Optional[str], baseline: bool,
             summary_out: Optional[str], output_format: str):
    """비콘 플러딩 DoS 시나리오 시뮬레이션

    \b
    예시:
      # 설정 파일로 실행하고 CSV 저장
      bsid simulate --config scenario.json --out metrics.csv

      # 단일 공격자 30분 프리셋
      bsid --seed 1 simulate --preset single-attacker

      # 같은 스트림을 검증 없이 저장 (기준선)
      bsid simulate --preset multi-attacker-2 --baseline --out baseline.csv
    """
    config = ctx.obj['config']
    simulate_cmd.simulate(config, scenario_file, preset, out, baseline, summary_out, output_format)


@cli.command('dos-calc')
@click.option('--mbps', type=click.FloatRange(min=0), required=True, help='공격자 대역폭 (Mbps)')
@click.option('--record-bytes', type=click.IntRange(min=0), default=36, help='EphID당 저장 바이트 (기본값: 36)')
@click.option('--hours', type=click.FloatRange(min=0), default=1.0, help='공격 시간 (기본값: 1)')
@click.option('--frame-bytes', type=click.IntRange(min=1), default=31,
              help='전송 슬롯당 바이트 (기본값: 31, 전체 비콘)')
@click.option('--efficiency', type=click.FloatRange(0, 1, min_open=True), default=1.0, help='MAC 효율 (0, 1]')
@click.option('--calibration', type=click.Choice(sorted(DOS_CALIBRATIONS)),
              help='보정값 이름 (레코드/슬롯 크기와 효율을 덮어씀)')
@output_format_option
@click.pass_context
def dos_calc(ctx, mbps: float, record_bytes: int, hours: float, frame_bytes: int, efficiency: float,
             calibration: Optional[str], output_format: str):
    """대역폭 기준 저장소 고갈 공격 규모 계산

    \b
    예시:
      # 1 Mbps, 36바이트 레코드, 전체 비콘 프레임, 8시간
      bsid dos-calc --mbps 1 --record-bytes 36 --hours 8

      # 발표된 시간당 대역 보정값 (1 Mbps → 1 GB/h)
      bsid dos-calc --mbps 1 --calibration full-record
    """
    config = ctx.obj['config']
    dos_calc_cmd.dos_calc(config, mbps, record_bytes, hours, frame_bytes, efficiency, output_format,
                          calibration=calibration)


if __name__ == '__main__':
    cli()
