"""Dos-calc command implementation"""

import click
from typing import Optional
from ..config import Config
from ..core.errors import BsidError
from ..sim.presets import dos_calibration
from ..sim.simnet import dos_magnitude
from ..utils.formatter import OutputFormatter


def dos_calc(config: Config, mbps: float, record_bytes: int, hours: float, frame_bytes: int,
             efficiency: float, output_format: str, calibration: Optional[str] = None) -> None:
    """Storage an attacker can force onto a receiver that stores every identifier"""
    try:
        if calibration:
            params = dos_calibration(calibration)
            record_bytes, frame_bytes, efficiency = (params['record_bytes'], params['frame_bytes'],
                                                     params['efficiency'])
        per_hour = dos_magnitude(mbps, record_bytes, 1.0, frame_bytes, efficiency)
        total = dos_magnitude(mbps, record_bytes, hours, frame_bytes, efficiency)
        beacons = mbps * 1e6 * efficiency / (frame_bytes * 8)

        if output_format == 'json':
            click.echo(OutputFormatter.format_json({
                'mbps': mbps, 'record_bytes': record_bytes, 'hours': hours, 'frame_bytes': frame_bytes,
                'efficiency': efficiency, 'calibration': calibration, 'beacons_per_second': beacons,
                'bytes_per_hour': per_hour, 'total_bytes': total,
            }))
        else:
            click.echo(OutputFormatter.format_table([{
                'Mbps': mbps,
                'RecordBytes': record_bytes,
                'Hours': hours,
                'Beacons/s': f"{beacons:,.1f}",
                'PerHour': OutputFormatter.format_size(per_hour),
                'Total': OutputFormatter.format_size(total),
            }]))
    except BsidError as e:
        click.echo(f"계산 실패: {e}", err=True)
        raise click.Abort()
