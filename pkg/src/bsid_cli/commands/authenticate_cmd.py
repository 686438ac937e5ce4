"""Authenticate command implementation"""

import click
from ..config import Config
from ..core.errors import BsidError
from ..core.registration import IssuedCredentials
from ..core.tesla_service import AuthClient, Mix, TeslaService
from ..utils.file_handler import FileHandler
from ..utils.formatter import OutputFormatter


def authenticate(config: Config, identity: str, day_index: int, method: str, prefix_bits: str,
                 output_format: str) -> None:
    """Exchange signed EphIDs for per-interval TESLA authenticators through the MIX"""
    try:
        cred_path = config.credentials_path(identity, day_index)
        if not cred_path.exists():
            click.echo(f"자격 증명 파일이 없습니다: {cred_path} (먼저 register 실행)", err=True)
            raise click.Abort()
        issued = IssuedCredentials.from_dict(FileHandler.read_document(str(cred_path)))

        keys = config.load_day_keys(day_index)
        service = TeslaService(keys, config.tesla_chain(day_index), randfunc=config.randfunc)
        published = config.published_auth_path(day_index)
        if published.exists():
            service.load_published(published)

        client = AuthClient(config.randfunc, prefix_bits)
        mix = Mix(service, rng_seed=config.seed)
        for index, credential in enumerate(issued.credentials, start=1):
            mix.submit(client.make_request(credential.ephid, credential.sd, index))
        report = mix.flush()
        service.save_published(published)

        obtained = client.download(service, method)
        rows = [{'interval': o.interval_index, 'ephid': o.ephid.hex(), 'auth': o.auth.hex()}
                for o in sorted(obtained, key=lambda o: o.interval_index)]
        out_path = config.authenticators_path(identity, day_index)
        if not rows:
            click.echo(f"❌ 새로 발급된 인증자가 없습니다 (거부 {report.rejected}건: {report.errors})", err=True)
            raise click.Abort()
        FileHandler.write_json({'identity': identity, 'day_index': day_index, 'authenticators': rows},
                               str(out_path))

        if report.rejected:
            click.echo(f"⚠️ 거부된 요청 {report.rejected}건: {report.errors}", err=True)
        if output_format == 'json':
            click.echo(OutputFormatter.format_json({'issued': report.issued, 'rejected': report.rejected,
                                                    'downloaded': len(rows), 'method': method}))
        else:
            click.echo(OutputFormatter.format_table(
                [{'Issued': report.issued, 'Rejected': report.rejected, 'Downloaded': len(rows),
                  'Method': method}]))
        click.echo(f"✅ 인증자 {len(rows)}개 저장: {out_path}")

    except click.Abort:
        raise
    except BsidError as e:
        click.echo(f"인증자 발급 실패: {e}", err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
