"""Tesla-serve command implementation"""

import click
from ..config import Config
from ..core.errors import BsidError
from ..core.tesla_service import KeyReleaseServer


def serve(config: Config, host: str, port: int, day_index: int) -> None:
    """Answer datagram key requests for one day; keys are released only after t_i"""
    try:
        chain = config.tesla_chain(day_index)
        server = KeyReleaseServer((host, port), chain)
    except BsidError as e:
        click.echo(f"키 공개 서버 시작 실패: {e}", err=True)
        raise click.Abort()
    except OSError as e:
        click.echo(f"포트를 열 수 없습니다: {e}", err=True)
        raise click.Abort()

    bound_host, bound_port = server.server_address[:2]
    click.echo(f"🚀 TESLA 키 공개 서버 실행 중: {bound_host}:{bound_port} (day {day_index}, L={chain.length})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("\n⚠️ 키 공개 서버를 종료합니다")
    finally:
        server.server_close()
