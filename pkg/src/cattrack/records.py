"""Run configuration and newline-delimited record files.

A record file holds one header object per trajectory (schema version,
config snapshot, units note, event log) followed by one object per
decimated sample with a fixed field order. Floats serialize as their
shortest round-trip decimals, so writing the same config and seed twice
produces byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .params import PhysicalParams, preset

SCHEMA_VERSION = 1

_FLAG_FIELDS = ("measure_x2", "measure_qubit", "feedback_on")


@dataclass
class RunConfig:
    """Everything a run needs: preset, overrides, protocol switches."""

    preset: str = "fig1a"
    overrides: dict = field(default_factory=dict)  # PhysicalParams/feedback fields
    duration: float = 30.0      # periods
    seed: int = 0
    seeds: list | None = None   # explicit ensemble seed list
    n_traj: int = 1
    decimation: int = 100       # samples per period
    out: str | None = None
    measure_x2: bool = True
    measure_qubit: bool = True
    feedback_on: bool = True
    true_xbar: float = 6.0      # initial packet displacement of the truth
    true_parity: str = "random"  # "random" | "even" | "odd"
    est_xbar: float = 6.0       # estimator initialization
    est_p: float = 0.5

    def physical(self) -> PhysicalParams:
        return preset(self.preset).with_overrides(**self.overrides).validate()

    def validate(self) -> "RunConfig":
        self.physical()
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if self.decimation < 1:
            raise ConfigError("decimation must be >= 1")
        if self.n_traj < 1:
            raise ConfigError("n_traj must be >= 1")
        if self.true_parity not in ("random", "even", "odd"):
            raise ConfigError(f"true_parity must be random/even/odd, got {self.true_parity!r}")
        if not 0.0 <= self.est_p <= 1.0:
            raise ConfigError("est_p must lie in [0, 1]")
        return self

    def seed_list(self, n_traj: int | None = None) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        n = self.n_traj if n_traj is None else n_traj
        return [self.seed + i for i in range(n)]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key: {sorted(unknown)[0]!r}")
        return cls(**data).validate()

    def merged(self, **kwargs) -> "RunConfig":
        """Copy with updates; CLI flags use this to override file values."""
        data = self.to_dict()
        for key, value in kwargs.items():
            if value is None:
                continue
            if key == "overrides":
                data["overrides"] = {**data["overrides"], **value}
            elif key in data:
                data[key] = value
            else:
                raise ConfigError(f"unknown config key: {key!r}")
        return RunConfig.from_dict(data)


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_records(records, path) -> None:
    """Write record objects (or previously loaded ones) as NDJSON.

    Each record contributes one header line followed by its sample lines;
    reading and re-writing a file reproduces it byte for byte.
    """
    if not isinstance(records, (list, tuple)):
        records = [records]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(_dump(rec.header_dict()) + "\n")
                for sample in rec.sample_dicts():
                    fh.write(_dump(sample) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


@dataclass
class LoadedRecord:
    """A trajectory read back from NDJSON; structurally writable again."""

    header: dict
    samples: list

    def header_dict(self) -> dict:
        return self.header

    def sample_dicts(self):
        return iter(self.samples)

    @property
    def schema_version(self) -> int:
        return int(self.header.get("schema_version", -1))


def read_records(path) -> list[LoadedRecord]:
    """Parse an NDJSON record file into LoadedRecords (header + samples)."""
    out: list[LoadedRecord] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                kind = obj.get("kind")
                if kind == "header":
                    out.append(LoadedRecord(header=obj, samples=[]))
                elif kind == "sample":
                    if not out:
                        raise ConfigError(
                            f"{path}:{lineno}: sample line before any header"
                        )
                    out[-1].samples.append(obj)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown line kind {kind!r}")
    except OSError as exc:
        raise OSError(f"cannot read records from {path}: {exc}") from exc
    return out
