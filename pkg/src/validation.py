#!/usr/bin/env python3
"""
validation.py - Shared enums, tag parsing and the exception hierarchy.

This module provides:
- PriorKnowledge: Prior-knowledge sets a verdict is taken under (all, cont, stab)
- SystemClass: Mutually exclusive controllability/stabilizability classes
- Goal: What the data is meant for (identification or stabilization)
- Universality: Outcome of an offline (universal) input verdict
- PkDesignError and subclasses: Every error the toolkit raises

Verdicts that say "not informative" are values, not exceptions. Exceptions
are reserved for broken preconditions, malformed files and impossible
requests.

Version: 1.0.0
"""

import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union


# ============================================================================
# ENUMS
# ============================================================================

class SystemClass(Enum):
    """Controllability class of a pair (A, B); exactly one applies."""
    CONTROLLABLE = "controllable"
    STABILIZABLE_NOT_CONTROLLABLE = "stabilizable-not-controllable"
    NOT_STABILIZABLE = "not-stabilizable"

    @property
    def is_stabilizable(self) -> bool:
        return self is not SystemClass.NOT_STABILIZABLE


class PriorKnowledge(Enum):
    """Prior knowledge on the true system."""
    ALL = "all"              # no prior knowledge, every pair is admitted
    CONTROLLABLE = "cont"
    STABILIZABLE = "stab"

    def admits(self, system_class: SystemClass) -> bool:
        """Whether a system of the given class lies in this prior-knowledge set."""
        if self is PriorKnowledge.ALL:
            return True
        if self is PriorKnowledge.CONTROLLABLE:
            return system_class is SystemClass.CONTROLLABLE
        return system_class.is_stabilizable


class Goal(Enum):
    """Purpose the collected data has to serve."""
    IDENTIFICATION = "id"
    STABILIZATION = "stab"


class Universality(Enum):
    """Outcome of an offline input verdict."""
    UNIVERSAL = "universal"
    NOT_UNIVERSAL = "not-universal"
    IMPOSSIBLE = "impossible"   # no input is universal for this goal and prior knowledge


E = TypeVar("E", bound=Enum)

# Aliases accepted on the command line and in JSON documents
_ALIASES: Dict[str, str] = {
    "m": "all",
    "none": "all",
    "controllable": "cont",
    "stabilizable": "stab",
    "identification": "id",
    "stabilization": "stab",
}


def parse_enum(enum_cls: Type[E], value: Any, field: str = "value") -> E:
    """
    Parse a tag into an enum member, accepting members, values and aliases.

    Args:
        enum_cls: Target enum class
        value: Member, value string or alias
        field: Field name reported when parsing fails

    Returns:
        Enum member

    Raises:
        DataFormatError: If the value names no member
    """
    if isinstance(value, enum_cls):
        return value
    if isinstance(value, str):
        key = value.strip().lower()
        key = _ALIASES.get(key, key)
        for member in enum_cls:
            if member.value == key or member.name.lower() == key.replace("-", "_"):
                return member
    choices = ", ".join(m.value for m in enum_cls)
    raise DataFormatError(f"invalid {field} {value!r} (expected one of: {choices})", field=field)


# ============================================================================
# EXCEPTIONS
# ============================================================================

class PkDesignError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(PkDesignError, ValueError):
    """Shape or dimension mismatch between operands."""


class NotInformativeError(PkDesignError):
    """An operation required informative data and did not get it."""

    def __init__(self, message: str, rank_report: Optional[Any] = None):
        super().__init__(message)
        self.rank_report = rank_report


class InfeasibleRequestError(PkDesignError, ValueError):
    """A generator request that no object satisfies."""


class NotStabilizableError(PkDesignError):
    """The plant has an uncontrollable mode on or outside the unit circle."""


class TrajectoryMismatchError(PkDesignError):
    """Data is not a trajectory of the system it was checked against."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class MaxStepsExceededError(PkDesignError):
    """The online experiment ran past its step bound."""

    def __init__(self, message: str, steps: int = 0):
        super().__init__(message)
        self.steps = steps


class DataFormatError(PkDesignError, ValueError):
    """Malformed input document; names the offending field."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class UnknownCampaignError(PkDesignError, KeyError):
    """Campaign identifier not present in the registry."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown campaign"


# ============================================================================
# DOCUMENT HELPERS
# ============================================================================

# Version stamped into every JSON document the toolkit writes
FORMAT_VERSION = 1


def require_field(data: Any, name: str, context: str = "document") -> Any:
    """Fetch a required field from a decoded JSON object."""
    if not isinstance(data, dict):
        raise DataFormatError(f"{context} must be a JSON object", field=name)
    if name not in data or data[name] is None:
        raise DataFormatError(f"{context} is missing required field '{name}'", field=name)
    return data[name]


def load_json(path: Union[str, Path]) -> Any:
    """Read a JSON document, turning I/O and syntax problems into DataFormatError."""
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise DataFormatError(f"file not found: {path}", field=str(path))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}", field=str(path))


def dump_json(data: Any, path: Union[str, Path]) -> Path:
    """Write a JSON document with stable key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
