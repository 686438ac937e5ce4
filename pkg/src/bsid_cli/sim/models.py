"""Simulation configuration and metrics models"""

from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core.errors import InvalidArgument
from ..core.tesla_service import DEFAULT_PERIOD, DEFAULT_SYNC_ERROR, SECONDS_PER_DAY


class SimConfig(BaseModel):
    """Scenario parameters; JSON scenario files use these field names"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    duration: float = Field(1800.0, gt=0, description='beacon sources stop after this many seconds')
    epoch: int = Field(DEFAULT_PERIOD, gt=0, description='TESLA interval T in seconds')
    sync_error: int = Field(DEFAULT_SYNC_ERROR, ge=0, description='clock sync bound Δ in seconds')
    attacker_count: int = Field(1, ge=0)
    attacker_interval: float = Field(20.0, gt=0, description='milliseconds between attacker beacons')
    honest_count: int = Field(2, ge=0)
    honest_interval: float = Field(1000.0, gt=0, description='milliseconds between honest beacons')
    reception_rate: float = Field(1.0, ge=0, le=1, description='attacker beacon reception probability')
    honest_reception_rate: float = Field(1.0, ge=0, le=1)
    verification_delay: float = Field(2.0, ge=0, description='lag after t_i before k_i is processed')
    sample_interval: float = Field(10.0, gt=0)
    rng_seed: int = Field(0, ge=0, lt=2 ** 64)
    signer_modulus_bits: int = Field(512, ge=128, le=4096)
    cut_and_choose_sets: int = Field(2, ge=1, le=0xFFFF)

    @model_validator(mode='after')
    def check_fits_one_day(self) -> 'SimConfig':
        if self.epoch > SECONDS_PER_DAY or SECONDS_PER_DAY % self.epoch:
            raise ValueError('epoch must divide one day')
        if self.verification_delay >= self.epoch:
            raise ValueError('verification_delay must be shorter than epoch')
        if self.duration + 2 * self.epoch + self.verification_delay > SECONDS_PER_DAY:
            raise ValueError('scenario including drain must fit in one day')
        return self

    @property
    def end_time(self) -> float:
        """Sources stop at ``duration``; keys keep flowing until pending records resolve"""
        return self.duration + 2 * self.epoch + self.verification_delay

    @property
    def receiver_count(self) -> int:
        return max(self.honest_count, 1)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'SimConfig':
        try:
            return cls.model_validate_json(Path(path).read_text(encoding='utf-8'))
        except ValidationError as e:
            raise InvalidArgument(f"시나리오 설정 오류 ({path}): {e}")

    @classmethod
    def parse(cls, data: dict) -> 'SimConfig':
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise InvalidArgument(f"시나리오 설정 오류: {e}")


class MetricSample(BaseModel):
    time_s: float
    receiver_id: int
    received: int
    pending: int
    verified: int
    rejected: int
    bytes: int


class ReceiverSummary(BaseModel):
    receiver_id: int
    sightings: int = 0
    received: int = 0
    received_from_attackers: int = 0
    verified: int = 0
    verified_from_attackers: int = 0
    honest_received: int = 0
    honest_verified: int = 0
    rejected: int = 0
    expired: int = 0
    unsafe: int = 0
    stored_records: int = 0
    stored_bytes: int = 0


class SimMetrics(BaseModel):
    mode: str
    config: SimConfig
    samples: List[MetricSample] = Field(default_factory=list)
    receivers: List[ReceiverSummary] = Field(default_factory=list)
    received_from_attackers: int = 0
    verified_total: int = 0
    verified_from_attackers: int = 0
    stored_total: int = 0
    reduction_rate: Optional[float] = None
