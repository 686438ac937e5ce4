"""Check-exposure command implementation"""

import click
from ..config import Config
from ..core import exposure
from ..core.errors import BsidError, NoCodeAvailable
from ..core.receiver_store import ReceiverStore
from ..utils.file_handler import FileHandler
from ..utils.formatter import OutputFormatter


def _finaltrial_codes(config: Config, identity: str, publication_day: int,
                      max_cases: int) -> exposure.FinalTrialCodeSet:
    """Codes are generated once per publication day and kept next to the credentials"""
    path = config.finaltrial_codes_path(identity, publication_day)
    if path.exists():
        return exposure.FinalTrialCodeSet.from_dict(FileHandler.read_document(str(path)))

    signer = config.signer
    keys = signer.finaltrial_public_keys(publication_day)
    codes = exposure.finaltrial_generate(
        max_cases, keys,
        sign=lambda blinded: signer.sign_finaltrial_root(blinded, publication_day),
        randfunc=config.randfunc,
    )
    FileHandler.write_json(codes.to_dict(), str(path))
    return codes


def check_exposure(config: Config, identity: str, post_match: bool, max_cases: int,
                   output_format: str) -> None:
    """Match verified contacts against published positive reports"""
    try:
        store_path = config.store_path(identity)
        if not store_path.exists():
            click.echo(f"'{identity}'의 접촉 기록이 없습니다: {store_path}")
            return
        store = ReceiverStore(path=store_path)
        board = exposure.BulletinBoard(config.board_path)
        matches = exposure.check_exposure(store, board)

        rows = [{'PublicationDay': m.publication_day, 'Case': m.case_number, 'ContactDay': m.day_index,
                 'EphIDs': len(m.ephids)} for m in matches]
        if output_format == 'json':
            click.echo(OutputFormatter.format_json([{**row, 'ephids': [e.hex() for e in m.ephids]}
                                                    for row, m in zip(rows, matches)]))
        elif rows:
            click.echo(OutputFormatter.format_table(rows, ['PublicationDay', 'Case', 'ContactDay', 'EphIDs']))

        if not matches:
            click.echo("✓ 노출 기록이 없습니다")
            return
        click.echo(f"⚠️ 양성 보고와 일치하는 접촉 {len(matches)}건")

        if post_match:
            for publication_day in sorted({m.publication_day for m in matches}):
                codes = _finaltrial_codes(config, identity, publication_day, max_cases)
                for case_number in sorted({m.case_number for m in matches if m.publication_day == publication_day}):
                    exposure.finaltrial_post_match(codes, case_number, board, publication_day)
                    click.echo(f"📊 FinalTrial 매치 게시: day {publication_day} case {case_number}")

    except NoCodeAvailable as e:
        click.echo(f"❌ FinalTrial 코드가 부족합니다 (--max-cases 확인): {e}", err=True)
        raise click.Abort()
    except BsidError as e:
        click.echo(f"노출 확인 실패: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
