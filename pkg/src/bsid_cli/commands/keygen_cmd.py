"""Keygen command implementation"""

import click
from ..config import Config
from ..core.crypto_core import HASH_LEN, generate_day_keys
from ..core.errors import BsidError
from ..utils.file_handler import FileHandler
from ..utils.formatter import OutputFormatter


def generate_keys(config: Config, day_index: int, modulus_bits: int, finaltrial: bool,
                  output_format: str) -> None:
    """Generate the signer's day key (and FinalTrial key) plus the day's TESLA chain anchor"""
    try:
        if finaltrial and modulus_bits <= HASH_LEN * 8 + 1:
            click.echo("FinalTrial 키는 257비트보다 큰 모듈러스가 필요합니다", err=True)
            raise click.Abort()

        click.echo(f"🚀 day {day_index} 서명 키 생성 중 ({modulus_bits}비트)...")
        keys = generate_day_keys(day_index, modulus_bits, config.randfunc)
        paths = config.save_day_keys(keys)
        rows = [{'Key': 'day', 'Day': day_index, 'Bits': keys.modulus_bits, 'File': str(paths['public'])}]

        if finaltrial:
            ft_keys = generate_day_keys(day_index, modulus_bits, config.randfunc)
            ft_paths = config.save_day_keys(ft_keys, finaltrial=True)
            rows.append({'Key': 'finaltrial', 'Day': day_index, 'Bits': ft_keys.modulus_bits,
                         'File': str(ft_paths['public'])})

        config.tesla_master_seed(create=True)
        anchor = config.tesla_chain(day_index).chain_anchor()
        anchor_path = config.anchor_path(day_index)
        FileHandler.write_json(anchor.to_dict(), str(anchor_path))
        rows.append({'Key': 'tesla-anchor', 'Day': day_index, 'Bits': len(anchor.anchor) * 8,
                     'File': str(anchor_path)})

        if output_format == 'json':
            click.echo(OutputFormatter.format_json(rows))
        else:
            click.echo(OutputFormatter.format_table(rows, ['Key', 'Day', 'Bits', 'File']))
        click.echo(f"✅ day {day_index} 키 생성 완료")

    except click.Abort:
        raise
    except BsidError as e:
        click.echo(f"키 생성 실패: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
