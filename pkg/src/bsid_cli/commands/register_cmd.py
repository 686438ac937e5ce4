"""Register command implementation"""

import time
import click
from typing import Optional, Tuple
from ..config import Config
from ..core.errors import AlreadyRegistered, AuditFailed, Blocked, BsidError, SignerMisbehavior
from ..core.ephid_gen import new_main_seed
from ..core.registration import client_begin, run_registration
from ..core.signer_server import RemoteSigner
from ..utils.file_handler import FileHandler


def register(config: Config, identity: str, day_index: int, set_count: int, ephid_count: int,
             signer_address: Optional[Tuple[str, int]]) -> None:
    """Run one cut-and-choose issuance and write the unblinded credentials"""
    try:
        keys = config.load_day_keys(day_index)
        out_path = config.credentials_path(identity, day_index)

        main = new_main_seed(day_index, config.randfunc)
        click.echo(f"🚀 day {day_index} 등록 시작 (M={set_count}, n={ephid_count})")
        request, state = client_begin(main, set_count, ephid_count, keys, identity, show_progress=True)

        if signer_address:
            signer = RemoteSigner(signer_address[0], signer_address[1], keys)
            click.echo(f"서명자 연결: {signer_address[0]}:{signer_address[1]}")
        else:
            signer = config.signer
        issued = run_registration(state, request, signer, time.time())

        FileHandler.write_json(issued.to_dict(), str(out_path))
        click.echo(f"✓ 선택된 세트: {issued.selected}/{set_count}")
        click.echo(f"✅ EphID {len(issued.credentials)}개 서명 완료: {out_path}")

    except Blocked:
        click.echo(f"❌ '{identity}'는 차단된 사용자입니다", err=True)
        raise click.Abort()
    except AlreadyRegistered:
        click.echo(f"❌ '{identity}'는 day {day_index}에 이미 등록되었습니다", err=True)
        raise click.Abort()
    except AuditFailed as e:
        click.echo(f"❌ 감사 실패, 사용자가 차단되었습니다: {e}", err=True)
        raise click.Abort()
    except SignerMisbehavior as e:
        click.echo(f"⚠️ 서명자 응답이 유효하지 않습니다: {e}", err=True)
        raise click.Abort()
    except BsidError as e:
        click.echo(f"등록 실패: {e}", err=True)
        raise click.Abort()
    except ConnectionError as e:
        click.echo(f"서명자에 연결할 수 없습니다: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
