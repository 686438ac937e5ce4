"""Report-positive command implementation"""

import click
from ..config import Config
from ..core.errors import BsidError
from ..core.exposure import BulletinBoard, ReportedDay, infectious_window, publish_positive
from ..core.registration import IssuedCredentials
from ..utils.file_handler import FileHandler
from ..utils.formatter import OutputFormatter


def report_positive(config: Config, identity: str, symptom_day: int, report_day: int,
                    output_format: str) -> None:
    """Publish the selected set's secondary seed for every day of the infectious window"""
    try:
        days = []
        for day_index in infectious_window(symptom_day, report_day):
            path = config.credentials_path(identity, day_index)
            if not path.exists():
                continue
            issued = IssuedCredentials.from_dict(FileHandler.read_document(str(path)))
            days.append(ReportedDay(day_index=issued.day_index, secondary_seed=issued.secondary_seed,
                                    selected=issued.selected, n=len(issued.credentials)))
        if not days:
            click.echo(f"감염 기간(day {symptom_day}-2 ~ {report_day})의 자격 증명이 없습니다", err=True)
            raise click.Abort()

        board = BulletinBoard(config.board_path)
        case_number = publish_positive(days, board, report_day)

        rows = [{'Day': d.day_index, 'Selected': d.selected, 'EphIDs': d.n} for d in days]
        if output_format == 'json':
            click.echo(OutputFormatter.format_json({'publication_day': report_day, 'case_number': case_number,
                                                    'days': rows}))
        else:
            click.echo(OutputFormatter.format_table(rows, ['Day', 'Selected', 'EphIDs']))
        click.echo(f"✅ 양성 보고 게시 완료: day {report_day} case {case_number}")

    except click.Abort:
        raise
    except BsidError as e:
        click.echo(f"양성 보고 실패: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
