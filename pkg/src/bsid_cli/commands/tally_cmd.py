"""Tally command implementation"""

import click
from ..config import Config
from ..core.errors import BsidError
from ..core.exposure import BulletinBoard, TallyStatus, finaltrial_tally
from ..utils.formatter import OutputFormatter


def tally(config: Config, publication_day: int, case_number: int, threshold: int, output_format: str) -> None:
    try:
        board = BulletinBoard(config.board_path)
        result = finaltrial_tally(board, publication_day, case_number, config.finaltrial_public_keys(),
                                  threshold)
        row = {'Day': publication_day, 'Case': result.case_number, 'Matches': result.count,
               'Invalid': result.invalid, 'Threshold': threshold, 'Status': result.status.value}
        if output_format == 'json':
            click.echo(OutputFormatter.format_json(row))
        else:
            click.echo(OutputFormatter.format_table([row]))
        if result.status is TallyStatus.SUSPICIOUS:
            click.echo(f"⚠️ case {case_number}의 매치 수가 임계값({threshold})을 넘었습니다", err=True)
    except BsidError as e:
        click.echo(f"집계 실패: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
