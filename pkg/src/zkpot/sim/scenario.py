"""Scenario description: mobility source, protocol mode, channel/perception
parameters and the attacker mix.  Defaults mirror the common parameter table
used throughout the experiments."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..proofs import KdfConfig, KdfMode
from ..station import StationConfig


class ConfigError(ValueError):
    """Scenario or run configuration violates the schema."""


@dataclass(frozen=True)
class PerceptionParams:
    range_m: float = 65.0
    fov_deg: float = 120.0
    plate_width_m: float = 0.35
    vehicle_length_m: float = 4.0
    vehicle_width_m: float = 1.8

    def __post_init__(self):
        if min(self.range_m, self.fov_deg, self.plate_width_m,
               self.vehicle_length_m, self.vehicle_width_m) <= 0:
            raise ConfigError("perception parameters must be positive")


@dataclass(frozen=True)
class ChannelParams:
    range_m: float = 300.0
    pdr: float = 0.80

    def __post_init__(self):
        if not 0.0 <= self.pdr <= 1.0:
            raise ConfigError("pdr must lie in [0, 1]")
        if self.range_m <= 0:
            raise ConfigError("communication range must be positive")


@dataclass(frozen=True)
class ManhattanGrid:
    rows: int = 10
    cols: int = 10
    block_m: float = 100.0
    n_vehicles: int = 100
    speed_min: float = 8.0
    speed_max: float = 14.0
    lane_offset_m: float = 1.75  # right-hand lane separation from the road axis

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.n_vehicles < 1:
            raise ConfigError("grid dimensions and vehicle count must be positive")
        if not 0 < self.speed_min <= self.speed_max:
            raise ConfigError("need 0 < speed_min <= speed_max")
        if self.lane_offset_m < 0:
            raise ConfigError("lane_offset_m must be >= 0")


@dataclass(frozen=True)
class TraceFile:
    path: str


@dataclass(frozen=True)
class AttackerMix:
    spam: int = 0
    replay: int = 0
    silence: int = 0
    spam_fabrication_count: int = 8

    def total(self) -> int:
        return self.spam + self.replay + self.silence


@dataclass(frozen=True)
class Mode:
    """Protocol mode: LOCAL_ONLY, CONVENTIONAL, or POT with a repeat interval."""

    LOCAL_ONLY = "local_only"
    CONVENTIONAL = "conventional_cps"
    POT = "pot"

    kind: str
    pot_repeat_interval: int = 0

    @property
    def name(self) -> str:
        if self.kind == Mode.POT:
            return f"pot_{self.pot_repeat_interval}s"
        return self.kind

    @property
    def uses_radio(self) -> bool:
        return self.kind != Mode.LOCAL_ONLY


_POT_RE = re.compile(r"^pot_(\d+)s$")


def parse_mode(name: str) -> Mode:
    if name == Mode.LOCAL_ONLY:
        return Mode(Mode.LOCAL_ONLY)
    if name == Mode.CONVENTIONAL:
        return Mode(Mode.CONVENTIONAL)
    m = _POT_RE.match(name)
    if m and int(m.group(1)) >= 1:
        return Mode(Mode.POT, int(m.group(1)))
    raise ConfigError(
        f"unknown mode {name!r} (expected local_only, conventional_cps, or pot_<N>s)")


# One pseudonym epoch is expected to last 12 hours -> 1/43200 per second.
PSEUDONYM_CHANGE_PROB = 1.0 / 43200.0


@dataclass(frozen=True)
class ScenarioSpec:
    mobility: object = field(default_factory=ManhattanGrid)
    duration_ticks: int = 7200
    seed: int = 0
    mode: Mode = field(default_factory=lambda: Mode(Mode.POT, 3))
    channel: ChannelParams = field(default_factory=ChannelParams)
    perception: PerceptionParams = field(default_factory=PerceptionParams)
    attackers: AttackerMix = field(default_factory=AttackerMix)
    pending_ttl: int = 30
    spam_limit: int = 32
    max_proofs_per_cpm: int = 8
    kdf: KdfConfig = field(default_factory=KdfConfig)
    pseudonym_change_prob: float = PSEUDONYM_CHANGE_PROB

    def __post_init__(self):
        if self.duration_ticks < 1:
            raise ConfigError("duration_ticks must be >= 1")
        if isinstance(self.mobility, ManhattanGrid):
            if self.attackers.total() > self.mobility.n_vehicles:
                raise ConfigError("attacker counts exceed the vehicle count")

    def station_config(self) -> StationConfig:
        repeat = self.mode.pot_repeat_interval if self.mode.kind == Mode.POT else 1
        return StationConfig(
            proof_repeat_interval=repeat,
            max_proofs_per_cpm=self.max_proofs_per_cpm,
            pending_ttl=self.pending_ttl,
            spam_limit=self.spam_limit,
            kdf=self.kdf,
        )
