"""Signer-serve command implementation"""

import click
from ..config import Config
from ..core.errors import BsidError
from ..core.signer_server import SignerServer


def serve(config: Config, host: str, port: int) -> None:
    """Run the registration signer over TCP until interrupted"""
    try:
        signer = config.signer
        days = signer.days
        if not days:
            click.echo(f"서명 키가 없습니다: {config.keys_dir} (먼저 keygen 실행)", err=True)
            raise click.Abort()
        server = SignerServer((host, port), signer)
    except click.Abort:
        raise
    except BsidError as e:
        click.echo(f"서명자 시작 실패: {e}", err=True)
        raise click.Abort()
    except OSError as e:
        click.echo(f"포트를 열 수 없습니다: {e}", err=True)
        raise click.Abort()

    bound_host, bound_port = server.server_address[:2]
    click.echo(f"🚀 등록 서명자 실행 중: {bound_host}:{bound_port} (day {', '.join(map(str, days))})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("\n⚠️ 서명자를 종료합니다")
    finally:
        server.server_close()
