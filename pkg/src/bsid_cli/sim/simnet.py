"""Discrete-event simulation of honest devices, beacon-flooding attackers and receivers.

Sources emit on exact per-beacon timestamps; the event loop delivers them in
one-second batches (at the batch start) and releases TESLA keys at
``t_i + verification_delay``. Reception is an independent Bernoulli draw per
beacon per receiver. Everything random comes from ``rng_seed``.
"""

import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Set, Union

import numpy as np
import simpy
from tqdm import tqdm

from ..core.beacon_codec import BEACON_VERSION, DEFAULT_FLAGS, Beacon, decode, encode
from ..core.crypto_core import AUTH_TAG_LEN, EPHID_LEN, KEY_LEN, generate_day_keys
from ..core.ephid_gen import derive_baseline_ephids, new_main_seed
from ..core.errors import InvalidArgument
from ..core.receiver_store import RECORD_LEN, RETENTION_DAYS, ReceiverStore
from ..core.registration import Signer, client_begin, run_registration
from ..core.tesla_service import (
    AuthClient, ManualClock, Mix, TeslaChain, TeslaService, day_chain, day_start, release_key,
)
from ..utils.file_handler import FileHandler
from .models import MetricSample, ReceiverSummary, SimConfig, SimMetrics

logger = logging.getLogger(__name__)

SIM_DAY = 2  # registration runs on day SIM_DAY - 2
BASELINE_RECORD_BYTES = 36
DEFAULT_FRAME_BYTES = 31  # one full beacon per transmission
CSV_COLUMNS = ['time_s', 'receiver_id', 'received', 'pending', 'verified', 'rejected', 'bytes']

_US = 1_000_000
_ATTACKER_PREFIX = DEFAULT_FLAGS + bytes([BEACON_VERSION])
_ATTACKER_BODY = EPHID_LEN + AUTH_TAG_LEN
_RESERVED = b"\x00"


@dataclass
class _Source:
    attacker: bool
    phase_us: int
    interval_us: int
    rate: float
    rssi: int
    device: int = -1
    schedule: Optional[Dict[int, Beacon]] = None

    def emitted_before(self, t_us: int) -> int:
        """Number of beacons with timestamp < t_us"""
        if t_us <= self.phase_us:
            return 0
        return -(-(t_us - self.phase_us) // self.interval_us)


class BaselineReceiver:
    """Receiver without verification: every distinct EphID of the current interval is stored"""

    def __init__(self, period: int):
        self.period = period
        self._interval = None
        self._seen: Set[bytes] = set()
        self.sightings = 0
        self.received = 0

    def on_beacon(self, beacon: Beacon, now: float, rssi: int = 0) -> bool:
        self.sightings += 1
        interval = int(now // self.period)
        if interval != self._interval:
            self._interval = interval
            self._seen = set()
        if beacon.ephid in self._seen:
            return False
        self._seen.add(beacon.ephid)
        self.received += 1
        return True

    @property
    def stored(self) -> int:
        return self.received

    def storage_bytes(self) -> int:
        return self.received * BASELINE_RECORD_BYTES


class Simulation:
    def __init__(self, cfg: SimConfig, baseline: bool = False, show_progress: bool = False):
        self.cfg = cfg
        self.baseline = baseline
        self.show_progress = show_progress
        self.origin = day_start(SIM_DAY)
        self.rng = np.random.default_rng(cfg.rng_seed)
        self._randfunc = random.Random(cfg.rng_seed).randbytes
        self.chain: TeslaChain = day_chain(self._randfunc(KEY_LEN), SIM_DAY, cfg.epoch, cfg.sync_error)
        self.honest_ephids: Set[bytes] = set()
        self.samples: List[dict] = []

        schedules = self._baseline_schedules() if baseline else self._register_devices()
        self.sources = self._build_sources(schedules)
        if baseline:
            self.receivers = [BaselineReceiver(cfg.epoch) for _ in range(cfg.receiver_count)]
        else:
            anchor = self.chain.chain_anchor()
            self.receivers = [ReceiverStore([anchor]) for _ in range(cfg.receiver_count)]
        self.attacker_sightings = [0] * cfg.receiver_count
        self.attacker_stored = [0] * cfg.receiver_count

    # -- setup ----------------------------------------------------------------

    @property
    def honest_intervals(self) -> int:
        return min(self.chain.length, math.ceil(self.cfg.duration / self.cfg.epoch))

    def _register_devices(self) -> List[Dict[int, Beacon]]:
        """Run every honest device through issuance and the MIX exchange"""
        cfg = self.cfg
        if cfg.honest_count == 0:
            return []
        registered_at = day_start(SIM_DAY - 2)
        keys = generate_day_keys(SIM_DAY, cfg.signer_modulus_bits, self._randfunc)
        signer = Signer([keys], rng_seed=cfg.rng_seed)
        service = TeslaService(keys, self.chain, ManualClock(registered_at), self._randfunc)
        mix = Mix(service, rng_seed=cfg.rng_seed)

        clients = []
        for device in range(cfg.honest_count):
            main = new_main_seed(SIM_DAY, self._randfunc)
            request, state = client_begin(main, cfg.cut_and_choose_sets, self.honest_intervals,
                                          keys.public(), f"device-{device}")
            issued = run_registration(state, request, signer, registered_at)
            client = AuthClient(self._randfunc, prefix_bits=format(device % 256, '08b'))
            for index, credential in enumerate(issued.credentials, start=1):
                mix.submit(client.make_request(credential.ephid, credential.sd, index))
            clients.append(client)
        report = mix.flush()
        if report.rejected:
            logger.warning("%d honest authenticator requests rejected: %s", report.rejected, report.errors)

        schedules = []
        for client in clients:
            schedule = {}
            for obtained in client.download(service, 'partial'):
                schedule[obtained.interval_index] = decode(encode(Beacon(obtained.ephid, obtained.auth)))
                self.honest_ephids.add(obtained.ephid)
            schedules.append(schedule)
        logger.info("%d honest devices registered with %d intervals each",
                    cfg.honest_count, self.honest_intervals)
        return schedules

    def _baseline_schedules(self) -> List[Dict[int, Beacon]]:
        """Baseline devices: chained day seeds, no registration and no authenticator"""
        schedules = []
        for _ in range(self.cfg.honest_count):
            ids = derive_baseline_ephids(self._randfunc(KEY_LEN), self.honest_intervals)
            schedule = {}
            for index, identifier in enumerate(ids, start=1):
                schedule[index] = Beacon(ephid=identifier[:EPHID_LEN], auth=bytes(AUTH_TAG_LEN))
                self.honest_ephids.add(identifier[:EPHID_LEN])
            schedules.append(schedule)
        return schedules

    def _build_sources(self, schedules: List[Dict[int, Beacon]]) -> List[_Source]:
        cfg = self.cfg
        sources = []
        attacker_us = max(1, round(cfg.attacker_interval * 1000))
        for _ in range(cfg.attacker_count):
            sources.append(_Source(attacker=True, phase_us=int(self.rng.integers(0, attacker_us)),
                                   interval_us=attacker_us, rate=cfg.reception_rate,
                                   rssi=int(self.rng.integers(-75, -45))))
        honest_us = max(1, round(cfg.honest_interval * 1000))
        for device in range(cfg.honest_count):
            sources.append(_Source(attacker=False, phase_us=int(self.rng.integers(0, honest_us)),
                                   interval_us=honest_us, rate=cfg.honest_reception_rate,
                                   rssi=int(self.rng.integers(-90, -50)), device=device,
                                   schedule=schedules[device] if device < len(schedules) else {}))
        return sources

    # -- processes -------------------------------------------------------------

    def _deliver_batch(self, second: int) -> None:
        start_us = second * _US
        end_us = min((second + 1) * _US, round(self.cfg.duration * _US))
        period_us = self.cfg.epoch * _US
        receivers = len(self.receivers)

        times, beacons, rssi, attacker, masks = [], [], [], [], []
        for source in self.sources:
            first, last = source.emitted_before(start_us), source.emitted_before(end_us)
            count = last - first
            if count <= 0:
                continue
            stamps = source.phase_us + np.arange(first, last, dtype=np.int64) * source.interval_us
            if source.attacker:
                raw = self.rng.bytes(count * _ATTACKER_BODY)
                batch = [decode(_ATTACKER_PREFIX + raw[k * _ATTACKER_BODY:(k + 1) * _ATTACKER_BODY] + _RESERVED)
                         for k in range(count)]
            else:
                batch = [source.schedule.get(int(stamp // period_us) + 1) for stamp in stamps.tolist()]
            heard = self.rng.random((receivers, count)) < source.rate
            if 0 <= source.device < receivers:
                heard[source.device, :] = False
            if not source.attacker:
                heard &= np.array([b is not None for b in batch], dtype=bool)
            times.append(stamps)
            beacons.extend(batch)
            rssi.extend([source.rssi] * count)
            attacker.append(np.full(count, source.attacker, dtype=bool))
            masks.append(heard)

        if not times:
            return
        stamps = np.concatenate(times)
        order = np.argsort(stamps, kind='stable')
        heard = np.concatenate(masks, axis=1)
        is_attacker = np.concatenate(attacker)
        when = (self.origin + stamps / _US).tolist()

        for r, receiver in enumerate(self.receivers):
            picked = order[heard[r, order]]
            self.attacker_sightings[r] += int(is_attacker[picked].sum())
            on_beacon = receiver.on_beacon
            if self.baseline:
                stored = 0
                for x in picked.tolist():
                    if on_beacon(beacons[x], when[x], rssi[x]) and is_attacker[x]:
                        stored += 1
                self.attacker_stored[r] += stored
            else:
                for x in picked.tolist():
                    on_beacon(beacons[x], when[x], rssi[x])

    def _broadcast(self, env: simpy.Environment):
        for second in range(math.ceil(self.cfg.duration)):
            self._deliver_batch(second)
            yield env.timeout(1)

    def _release_keys(self, env: simpy.Environment):
        for index in range(1, self.chain.length + 1):
            release_at = self.chain.key_time(index) + self.cfg.verification_delay
            if release_at - self.origin > self.cfg.end_time:
                return
            yield env.timeout(release_at - env.now)
            key = release_key(self.chain, index, env.now)
            for store in self.receivers:
                store.on_key_release(key, index, SIM_DAY)
                store.prune(env.now)

    def _sample(self, env: simpy.Environment, progress: tqdm):
        interval = self.cfg.sample_interval
        for tick in range(1, int(self.cfg.end_time // interval) + 1):
            yield env.timeout(self.origin + tick * interval - env.now)
            for r in range(len(self.receivers)):
                self.samples.append(self._row(tick * interval, r))
            progress.update(interval)

    def _row(self, time_s: float, r: int) -> dict:
        receiver = self.receivers[r]
        if self.baseline:
            return {'time_s': time_s, 'receiver_id': r, 'received': receiver.received, 'pending': 0,
                    'verified': receiver.stored, 'rejected': 0, 'bytes': receiver.storage_bytes()}
        counters = receiver.counters
        pending_bytes, verified_bytes = receiver.storage_bytes()
        return {'time_s': time_s, 'receiver_id': r, 'received': counters.received,
                'pending': receiver.pending_count, 'verified': counters.verified,
                'rejected': counters.rejected + counters.expired + counters.unsafe,
                'bytes': pending_bytes + verified_bytes}

    # -- run --------------------------------------------------------------------

    def run(self) -> SimMetrics:
        env = simpy.Environment(initial_time=self.origin)
        with tqdm(total=self.cfg.end_time, unit='s', desc='시뮬레이션',
                  disable=not self.show_progress) as progress:
            env.process(self._broadcast(env))
            if not self.baseline:
                env.process(self._release_keys(env))
            env.process(self._sample(env, progress))
            env.run()
        return self._metrics()

    def _summary(self, r: int) -> ReceiverSummary:
        receiver = self.receivers[r]
        if self.baseline:
            return ReceiverSummary(
                receiver_id=r, sightings=receiver.sightings, received=receiver.received,
                received_from_attackers=self.attacker_sightings[r], verified=receiver.stored,
                verified_from_attackers=self.attacker_stored[r],
                honest_received=receiver.received - self.attacker_stored[r],
                honest_verified=receiver.stored - self.attacker_stored[r],
                stored_records=receiver.stored, stored_bytes=receiver.storage_bytes())
        counters = receiver.counters
        honest_verified = sum(1 for record in receiver.verified_records()
                              if record.ephid in self.honest_ephids)
        pending_bytes, verified_bytes = receiver.storage_bytes()
        return ReceiverSummary(
            receiver_id=r, sightings=counters.sightings, received=counters.received,
            received_from_attackers=self.attacker_sightings[r], verified=counters.verified,
            verified_from_attackers=receiver.verified_count - honest_verified,
            honest_received=counters.received - self.attacker_sightings[r],
            honest_verified=honest_verified, rejected=counters.rejected, expired=counters.expired,
            unsafe=counters.unsafe, stored_records=receiver.verified_count,
            stored_bytes=pending_bytes + verified_bytes)

    def _metrics(self) -> SimMetrics:
        summaries = [self._summary(r) for r in range(len(self.receivers))]
        received_from_attackers = sum(s.received_from_attackers for s in summaries)
        verified_total = sum(s.verified for s in summaries)
        return SimMetrics(
            mode='baseline' if self.baseline else 'verified',
            config=self.cfg,
            samples=[MetricSample(**row) for row in self.samples],
            receivers=summaries,
            received_from_attackers=received_from_attackers,
            verified_total=verified_total,
            verified_from_attackers=sum(s.verified_from_attackers for s in summaries),
            stored_total=sum(s.stored_records for s in summaries),
            reduction_rate=(1 - verified_total / received_from_attackers) if received_from_attackers else None,
        )


def _as_config(cfg: Union[SimConfig, dict]) -> SimConfig:
    if isinstance(cfg, SimConfig):
        return cfg
    if isinstance(cfg, dict):
        return SimConfig.parse(cfg)
    raise InvalidArgument(f"지원하지 않는 설정 타입: {type(cfg).__name__}")


def run_scenario(cfg: Union[SimConfig, dict], show_progress: bool = False) -> SimMetrics:
    """Verified mode: receivers run the full in-place verification pipeline"""
    return Simulation(_as_config(cfg), baseline=False, show_progress=show_progress).run()


def baseline_scenario(cfg: Union[SimConfig, dict], show_progress: bool = False) -> SimMetrics:
    """Same attacker stream, but every received EphID is stored as a 36-byte record"""
    return Simulation(_as_config(cfg), baseline=True, show_progress=show_progress).run()


def dos_magnitude(bandwidth_mbps: float, record_bytes: int, hours: float,
                  frame_bytes: int = DEFAULT_FRAME_BYTES, efficiency: float = 1.0) -> int:
    """Whole bytes an attacker can make a receiver store: one identifier per ``frame_bytes`` on air"""
    if bandwidth_mbps < 0 or record_bytes < 0 or hours < 0:
        raise InvalidArgument("대역폭, 레코드 크기, 시간은 음수일 수 없습니다")
    if frame_bytes <= 0 or not 0 < efficiency <= 1.0:
        raise InvalidArgument("frame_bytes는 양수, efficiency는 (0, 1] 범위여야 합니다")
    beacons_per_second = bandwidth_mbps * 1e6 * efficiency / (frame_bytes * 8)
    return round(beacons_per_second * record_bytes * 3600 * hours)


def fourteen_day_bytes(records_per_day: int, record_bytes: int = RECORD_LEN) -> int:
    return records_per_day * record_bytes * RETENTION_DAYS


def export_metrics(metrics: SimMetrics, path: Union[str, Path]) -> int:
    """Write one CSV row per receiver per sampling tick; returns the row count"""
    rows = [sample.model_dump() for sample in metrics.samples]
    FileHandler.write_csv(rows, str(path), columns=CSV_COLUMNS)
    return len(rows)
