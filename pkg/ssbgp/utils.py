"""
Misc utilities for ssbgp.
"""
import json
from pathlib import Path
from typing import Type, Union

import numpy as np

from ssbgp.constants import _scenario_path


def to_seed_bytes(seed: Union[int, str, bytes]) -> bytes:
    """Turn an int/str/bytes seed into a nonempty byte string."""
    if isinstance(seed, bytes):
        out = seed
    elif isinstance(seed, int):
        out = str(seed).encode("ascii")
    else:
        out = str(seed).encode("utf-8")
    return out or b"\x00"


def get_rng(seed: Union[int, str, bytes] = 0) -> np.random.Generator:
    """Return a numpy generator derived deterministically from seed."""
    entropy = int.from_bytes(to_seed_bytes(seed), "big")
    return np.random.default_rng(entropy)


def pack_prefixed(data: bytes, width: int) -> bytes:
    """Return data preceded by its length as a width-byte big-endian int."""
    if len(data) >= 256**width:
        msg = f"{len(data)} bytes does not fit a {width} byte length prefix"
        raise ValueError(msg)
    return len(data).to_bytes(width, "big") + data


def pack_int(value: int, width: int) -> bytes:
    """Return value as a width-byte big-endian unsigned int."""
    return int(value).to_bytes(width, "big")


class ByteReader:
    """
    A cursor over a byte string used by the wire decoders.

    Parameters
    ----------
    data
        The bytes to parse.
    error
        The exception type raised on truncated or trailing input.
    """

    def __init__(self, data: bytes, error: Type[Exception] = ValueError):
        self.data = bytes(data)
        self.offset = 0
        self.error = error

    def take(self, count: int) -> bytes:
        end = self.offset + count
        if count < 0 or end > len(self.data):
            msg = f"need {count} bytes at offset {self.offset}, input too short"
            raise self.error(msg)
        out = self.data[self.offset:end]
        self.offset = end
        return out

    def take_int(self, width: int) -> int:
        return int.from_bytes(self.take(width), "big")

    def take_prefixed(self, width: int) -> bytes:
        return self.take(self.take_int(width))

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def finish(self):
        """Raise if unread bytes remain."""
        if self.remaining:
            msg = f"{self.remaining} trailing bytes after offset {self.offset}"
            raise self.error(msg)


def resolve_scenario_path(name: Union[str, Path]) -> Path:
    """
    Find a scenario file either on disk or among the bundled scenarios.

    Parameters
    ----------
    name
        A path to a json file, or the name of a bundled scenario with or
        without its ".json" suffix.
    """
    path = Path(name)
    if path.exists():
        return path
    bundled = str(name)
    if not bundled.endswith(".json"):
        bundled = bundled + ".json"
    path = _scenario_path / bundled
    if not path.exists():
        msg = f"{name} is not a valid scenario file or bundled scenario!"
        raise FileNotFoundError(msg)
    return path


def read_scenario_data(name: Union[str, Path]) -> dict:
    """Read the raw json document of a scenario."""
    path = resolve_scenario_path(name)
    with path.open("r", encoding="utf-8") as fi:
        return json.load(fi)


def bundled_scenarios():
    """Return the names of the scenarios shipped with ssbgp."""
    return sorted(x.stem for x in _scenario_path.glob("*.json"))
