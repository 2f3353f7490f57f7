"""
Dataclasses configured in a sensible way
"""
import functools

from pydantic import ConfigDict
from pydantic.dataclasses import dataclass

Config = ConfigDict(
    validate_assignment=True,
    arbitrary_types_allowed=True,
)


dataclass = functools.partial(dataclass, config=Config)
