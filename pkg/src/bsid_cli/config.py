"""Configuration management for BlindSignedID CLI"""

import os
import re
from pathlib import Path
from typing import Dict, Optional, Union

from .core.crypto_core import KEY_LEN, DayKeyPair, RandFunc, make_randfunc
from .core.errors import InvalidArgument
from .core.registration import Blocklist, ServedLog, Signer
from .core.tesla_service import ChainAnchor, TeslaChain, day_chain
from .utils.file_handler import FileHandler

DEFAULT_DATA_DIR = './bsid-data'
_IDENTITY_PATTERN = re.compile(r'^[A-Za-z0-9_.@+-]{1,128}$')


class Config:
    def __init__(self, data_dir: Optional[str] = None, seed: Optional[int] = None):
        self.data_dir = Path(data_dir or os.environ.get('BSID_DATA_DIR', DEFAULT_DATA_DIR))
        if seed is None and os.environ.get('BSID_SEED'):
            seed = int(os.environ['BSID_SEED'])
        self.seed = seed
        self._randfunc = None
        self._signer = None

    def _dir(self, name: str) -> Path:
        path = self.data_dir / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    @property
    def randfunc(self) -> RandFunc:
        """One byte source per invocation so a fixed seed reproduces the whole run"""
        if self._randfunc is None:
            self._randfunc = make_randfunc(self.seed)
        return self._randfunc

    @property
    def keys_dir(self) -> Path:
        return self._dir('keys')

    @property
    def credentials_dir(self) -> Path:
        return self._dir('credentials')

    @property
    def stores_dir(self) -> Path:
        return self._dir('stores')

    @property
    def board_path(self) -> Path:
        return self._dir('board') / 'board.journal'

    @property
    def blocklist_path(self) -> Path:
        return self._dir('signer') / 'blocklist.tsv'

    @property
    def served_log_path(self) -> Path:
        return self._dir('signer') / 'served.log'

    def published_auth_path(self, day_index: int) -> Path:
        return self._dir('published') / f'day-{day_index}.bin'

    def store_path(self, identity: str) -> Path:
        return self.stores_dir / f'{check_identity(identity)}.store'

    def credentials_path(self, identity: str, day_index: int) -> Path:
        return self.credentials_dir / f'{check_identity(identity)}-day-{day_index}.json'

    def authenticators_path(self, identity: str, day_index: int) -> Path:
        return self.credentials_dir / f'{check_identity(identity)}-day-{day_index}.auth.json'

    def finaltrial_codes_path(self, identity: str, day_index: int) -> Path:
        return self.credentials_dir / f'{check_identity(identity)}-finaltrial-day-{day_index}.json'

    # -- key material ---------------------------------------------------------

    def day_key_path(self, day_index: int, private: bool = True, finaltrial: bool = False) -> Path:
        kind = 'finaltrial-day' if finaltrial else 'day'
        suffix = 'key' if private else 'pub'
        return self.keys_dir / f'{kind}-{day_index}.{suffix}.json'

    def load_day_keys(self, day_index: int, private: bool = False, finaltrial: bool = False) -> DayKeyPair:
        path = self.day_key_path(day_index, private=private, finaltrial=finaltrial)
        if not path.exists():
            kind = 'FinalTrial ' if finaltrial else ''
            raise InvalidArgument(f"day {day_index}의 {kind}키 파일이 없습니다: {path} (먼저 keygen 실행)")
        keys = DayKeyPair.from_dict(FileHandler.read_document(str(path)))
        if keys.day_index != day_index:
            raise InvalidArgument(f"키 파일의 day({keys.day_index})가 요청한 day({day_index})와 다릅니다")
        return keys

    def save_day_keys(self, keys: DayKeyPair, finaltrial: bool = False) -> Dict[str, Path]:
        private = self.day_key_path(keys.day_index, private=True, finaltrial=finaltrial)
        public = self.day_key_path(keys.day_index, private=False, finaltrial=finaltrial)
        FileHandler.write_json(keys.to_dict(include_private=True), str(private))
        FileHandler.write_json(keys.public().to_dict(), str(public))
        return {'private': private, 'public': public}

    def finaltrial_public_keys(self) -> Dict[int, DayKeyPair]:
        keys = {}
        for path in sorted(self.keys_dir.glob('finaltrial-day-*.pub.json')):
            day_keys = DayKeyPair.from_dict(FileHandler.read_document(str(path)))
            keys[day_keys.day_index] = day_keys
        return keys

    @property
    def tesla_seed_path(self) -> Path:
        return self.keys_dir / 'tesla-seed.json'

    def tesla_master_seed(self, create: bool = False) -> bytes:
        path = self.tesla_seed_path
        if path.exists():
            return bytes.fromhex(FileHandler.read_document(str(path))['master_seed'])
        if not create:
            raise InvalidArgument(f"TESLA 마스터 시드가 없습니다: {path} (먼저 keygen 실행)")
        seed = self.randfunc(KEY_LEN)
        FileHandler.write_json({'master_seed': seed.hex()}, str(path))
        return seed

    def tesla_chain(self, day_index: int) -> TeslaChain:
        return day_chain(self.tesla_master_seed(), day_index)

    def anchor_path(self, day_index: int) -> Path:
        return self.keys_dir / f'anchor-day-{day_index}.json'

    def load_anchor(self, day_index: int) -> ChainAnchor:
        path = self.anchor_path(day_index)
        if not path.exists():
            raise InvalidArgument(f"day {day_index}의 체인 앵커가 없습니다: {path}")
        return ChainAnchor.from_dict(FileHandler.read_document(str(path)))

    @property
    def signer(self) -> Signer:
        """In-process signer over every private day key in ``keys_dir``"""
        if self._signer is None:
            self._signer = Signer(rng_seed=self.seed,
                                  blocklist=Blocklist(self.blocklist_path),
                                  served=ServedLog(self.served_log_path))
            for path in sorted(self.keys_dir.glob('day-*.key.json')):
                self._signer.add_day_keys(DayKeyPair.from_dict(FileHandler.read_document(str(path))))
            for path in sorted(self.keys_dir.glob('finaltrial-day-*.key.json')):
                self._signer.add_finaltrial_keys(DayKeyPair.from_dict(FileHandler.read_document(str(path))))
        return self._signer


def check_identity(identity: Union[str, None]) -> str:
    if not identity or not _IDENTITY_PATTERN.match(identity):
        raise InvalidArgument(f"사용할 수 없는 신원 문자열: {identity!r} (영문, 숫자, _.@+- 만 허용)")
    return identity
