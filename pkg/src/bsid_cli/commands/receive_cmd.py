"""Receive command implementation"""

import click
from tqdm import tqdm
from typing import Dict, List, Optional, Sequence, Tuple
from ..config import Config
from ..core.beacon_codec import Beacon, decode, encode
from ..core.errors import BsidError, InvalidKey
from ..core.receiver_store import ReceiverStore
from ..core.tesla_service import ManualClock, fetch_released_key, release_key
from ..utils.file_handler import FileHandler
from ..utils.formatter import OutputFormatter


def _broadcast_schedule(config: Config, senders: Sequence[str], day_index: int) -> Dict[int, List[bytes]]:
    """Wire beacons per interval, one per sender, read from authenticator files"""
    schedule: Dict[int, List[bytes]] = {}
    for sender in senders:
        path = config.authenticators_path(sender, day_index)
        if not path.exists():
            raise FileNotFoundError(f"'{sender}'의 인증자 파일이 없습니다: {path} (먼저 authenticate 실행)")
        for entry in FileHandler.read_document(str(path))['authenticators']:
            beacon = Beacon(ephid=bytes.fromhex(entry['ephid']), auth=bytes.fromhex(entry['auth']))
            schedule.setdefault(int(entry['interval']), []).append(encode(beacon))
    return schedule


def receive(config: Config, identity: str, senders: Sequence[str], day_index: int,
            key_server: Optional[Tuple[str, int]], output_format: str) -> None:
    """Replay the senders' broadcasts into a receiver store and verify them with released keys"""
    try:
        anchor = config.load_anchor(day_index)
        store = ReceiverStore([anchor], path=config.store_path(identity))
        schedule = _broadcast_schedule(config, senders, day_index)
        if not schedule:
            click.echo("재생할 비콘이 없습니다")
            return

        chain = None if key_server else config.tesla_chain(day_index)
        clock = ManualClock()
        for index in tqdm(range(1, max(schedule) + 1), desc='구간 재생'):
            clock.set(anchor.interval_start(index))
            for wire in schedule.get(index, ()):
                store.on_beacon(decode(wire), clock.now())
            clock.set(anchor.key_time(index))
            if chain is not None:
                key = release_key(chain, index, clock.now())
            else:
                key = fetch_released_key(key_server[0], key_server[1], index)
            store.on_key_release(key, index, day_index)
        store.prune(clock.now())

        counters = store.counters
        summary = {'received': counters.received, 'verified': counters.verified,
                   'rejected': counters.rejected, 'expired': counters.expired,
                   'unsafe': counters.unsafe, 'stored': store.verified_count}
        if output_format == 'json':
            click.echo(OutputFormatter.format_json(summary))
        else:
            click.echo(OutputFormatter.format_table([summary]))
        click.echo(f"✅ 검증된 접촉 기록 {counters.verified}건 저장: {store.path}")

    except InvalidKey as e:
        click.echo(f"❌ 공개된 키가 체인 앵커로 검증되지 않습니다: {e}", err=True)
        raise click.Abort()
    except BsidError as e:
        click.echo(f"수신 처리 실패: {e}", err=True)
        raise click.Abort()
    except FileNotFoundError as e:
        click.echo(str(e), err=True)
        raise click.Abort()
    except Exception as e:
        click.echo(f"예상치 못한 오류: {e}", err=True)
        raise click.Abort()
