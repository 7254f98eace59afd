"""NDJSON trajectory reader.

Record files carry one header object (schema_version, config snapshot,
resolved physical parameters, event log) followed by one object per
decimated sample. Reading is strictly read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_SCHEMA = 1


class SchemaVersionError(RuntimeError):
    """The file declares a schema this reader does not support."""


@dataclass
class Trajectory:
    header: dict
    samples: list = field(default_factory=list)

    @property
    def seed(self):
        return self.header.get("seed")

    @property
    def physical(self) -> dict:
        return self.header.get("physical", {})

    @property
    def is_thermal(self) -> bool:
        return float(self.physical.get("n_T", 0.0)) > 0.0

    @property
    def jumps(self) -> list:
        return self.header.get("events", {}).get("jumps", [])

    def column(self, name: str) -> np.ndarray:
        """Numeric column across samples; raises KeyError naming the field."""
        try:
            return np.array([s[name] for s in self.samples], dtype=float)
        except KeyError:
            raise KeyError(
                f"field {name!r} missing from schema version "
                f"{self.header.get('schema_version')}"
            ) from None

    def modes(self) -> list:
        return [s.get("mode", "dormant") for s in self.samples]

    def has_fields(self, names) -> bool:
        if not self.samples:
            return False
        return all(name in self.samples[0] for name in names)


def load_trajectories(path) -> list[Trajectory]:
    """Parse a record file; raises SchemaVersionError on version mismatch."""
    out: list[Trajectory] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "header":
                version = obj.get("schema_version")
                if version != SUPPORTED_SCHEMA:
                    raise SchemaVersionError(
                        f"{path}:{lineno}: schema version {version!r} is not "
                        f"supported (expected {SUPPORTED_SCHEMA})"
                    )
                out.append(Trajectory(header=obj))
            elif kind == "sample":
                if not out:
                    raise ValueError(f"{path}:{lineno}: sample before any header")
                out[-1].samples.append(obj)
            else:
                raise ValueError(f"{path}:{lineno}: unknown line kind {kind!r}")
    if not out:
        raise ValueError(f"{path}: no trajectory headers found")
    return out
