"""Simulate command implementation"""

import click
from typing import Optional
from ..config import Config
from ..core.errors import BsidError
from ..sim.models import SimConfig
from ..sim.presets import preset_config
from ..sim.simnet import baseline_scenario, export_metrics, run_scenario
from ..utils.file_handler import FileHandler
from ..utils.formatter import OutputFormatter


def _load_config(config: Config, scenario_file: Optional[str], preset: Optional[str]) -> SimConfig:
    overrides = {} if config.seed is None else {'rng_seed': config.seed}
    if preset:
        return preset_config(preset, **overrides)
    cfg = SimConfig.from_file(scenario_file) if scenario_file else SimConfig()
    return SimConfig.parse({**cfg.model_dump(), **overrides}) if overrides else cfg


def simulate(config: Config, scenario_file: Optional[str], preset: Optional[str], out: Optional[str],
             baseline: bool, summary_out: Optional[str], output_format: str) -> None:
    """Run a flooding scenario and write per-receiver time series"""
    try:
        if scenario_file and preset:
            click.echo("--config와 --preset은 함께 사용할 수 없습니다", err=True)
            raise click.Abort()
        cfg = _load_config(config, scenario_file, preset)

        mode = '기준선(검증 없음)' if baseline else '검증'
        click.echo(f"🚀 시뮬레이션 시작 [{mode}]: {cfg.duration:g}초, 공격자 {cfg.attacker_count}, "
                   f"정상 기기 {cfg.honest_count}, 수신율 {cfg.reception_rate:g}")
        runner = baseline_scenario if baseline else run_scenario
        metrics = runner(cfg, show_progress=True)

        if out:
            rows = export_metrics(metrics, out)
            click.echo(f"✓ 메트릭 {rows}행 저장: {out}")

        summaries = [s.model_dump() for s in metrics.receivers]
        if summary_out:
            FileHandler.write_file(summaries, summary_out)
            click.echo(f"✓ 수신기 요약 저장: {summary_out}")

        if output_format == 'json':
            click.echo(OutputFormatter.format_json(metrics.model_dump(exclude={'samples'})))
        else:
            click.echo(OutputFormatter.format_receivers(summaries))

        click.echo(f"📊 공격자 EphID 수신: {metrics.received_from_attackers:,}")
        click.echo(f"📊 저장된 공격자 EphID: {metrics.verified_from_attackers:,}")
        if metrics.reduction_rate is not None:
            click.echo(f"📊 감소율: {metrics.reduction_rate * 100:.2f}%")
        click.echo("✅ 시뮬레이션 완료")

    except click.Abort:
        raise
    except BsidError as e:
        click.echo(f"시뮬레이션 실패: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
