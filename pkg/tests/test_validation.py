#!/usr/bin/env python3
"""
Unit tests for validation.py - Enums, tag parsing and JSON helpers.

Tests cover:
- PriorKnowledge membership rules
- parse_enum with values, names and aliases
- Exception hierarchy and carried fields
- require_field / load_json / dump_json
"""

import json
import os
import sys

import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from validation import (
    DataFormatError,
    DimensionError,
    Goal,
    InfeasibleRequestError,
    MaxStepsExceededError,
    NotInformativeError,
    PkDesignError,
    PriorKnowledge,
    SystemClass,
    TrajectoryMismatchError,
    UnknownCampaignError,
    Universality,
    dump_json,
    load_json,
    parse_enum,
    require_field,
)


# ============================================================================
# ENUM TESTS
# ============================================================================

class TestPriorKnowledge:
    """Tests for prior-knowledge membership."""

    def test_all_admits_every_class(self):
        """pk=all admits every system class."""
        assert all(PriorKnowledge.ALL.admits(c) for c in SystemClass)

    def test_controllable_admits_only_controllable(self):
        """pk=cont admits controllable systems only."""
        assert PriorKnowledge.CONTROLLABLE.admits(SystemClass.CONTROLLABLE)
        assert not PriorKnowledge.CONTROLLABLE.admits(SystemClass.STABILIZABLE_NOT_CONTROLLABLE)
        assert not PriorKnowledge.CONTROLLABLE.admits(SystemClass.NOT_STABILIZABLE)

    def test_stabilizable_admits_stabilizable_classes(self):
        """pk=stab admits controllable and stabilizable systems."""
        assert PriorKnowledge.STABILIZABLE.admits(SystemClass.CONTROLLABLE)
        assert PriorKnowledge.STABILIZABLE.admits(SystemClass.STABILIZABLE_NOT_CONTROLLABLE)
        assert not PriorKnowledge.STABILIZABLE.admits(SystemClass.NOT_STABILIZABLE)

    def test_system_class_stabilizable_flag(self):
        """Only the not-stabilizable class reports is_stabilizable False."""
        assert SystemClass.CONTROLLABLE.is_stabilizable
        assert SystemClass.STABILIZABLE_NOT_CONTROLLABLE.is_stabilizable
        assert not SystemClass.NOT_STABILIZABLE.is_stabilizable


class TestParseEnum:
    """Tests for parse_enum."""

    def test_parse_values(self):
        """Enum values parse to their members."""
        assert parse_enum(PriorKnowledge, "all") is PriorKnowledge.ALL
        assert parse_enum(PriorKnowledge, "cont") is PriorKnowledge.CONTROLLABLE
        assert parse_enum(Goal, "id") is Goal.IDENTIFICATION
        assert parse_enum(Universality, "not-universal") is Universality.NOT_UNIVERSAL

    def test_parse_names_and_case(self):
        """Member names parse case-insensitively."""
        assert parse_enum(PriorKnowledge, "STABILIZABLE") is PriorKnowledge.STABILIZABLE
        assert parse_enum(SystemClass, "Stabilizable-Not-Controllable") is SystemClass.STABILIZABLE_NOT_CONTROLLABLE

    def test_parse_aliases(self):
        """Long-form aliases are accepted."""
        assert parse_enum(PriorKnowledge, "controllable") is PriorKnowledge.CONTROLLABLE
        assert parse_enum(PriorKnowledge, "none") is PriorKnowledge.ALL
        assert parse_enum(Goal, "stabilization") is Goal.STABILIZATION

    def test_member_passes_through(self):
        """A member is returned unchanged."""
        assert parse_enum(Goal, Goal.STABILIZATION) is Goal.STABILIZATION

    def test_invalid_value_names_field(self):
        """Unknown tags raise DataFormatError carrying the field name."""
        with pytest.raises(DataFormatError) as exc:
            parse_enum(PriorKnowledge, "observable", field="pk")
        assert exc.value.field == "pk"
        assert "all, cont, stab" in str(exc.value)

    def test_non_string_rejected(self):
        """Non-string values are rejected."""
        with pytest.raises(DataFormatError):
            parse_enum(Goal, 3)


# ============================================================================
# EXCEPTION TESTS
# ============================================================================

class TestExceptions:
    """Tests for the exception hierarchy."""

    def test_every_error_is_a_pkdesign_error(self):
        """All toolkit errors share one base class."""
        for cls in (DimensionError, NotInformativeError, InfeasibleRequestError,
                    TrajectoryMismatchError, MaxStepsExceededError, DataFormatError,
                    UnknownCampaignError):
            assert issubclass(cls, PkDesignError)

    def test_value_error_compatibility(self):
        """Shape and format errors are also ValueErrors."""
        assert issubclass(DimensionError, ValueError)
        assert issubclass(DataFormatError, ValueError)
        assert issubclass(InfeasibleRequestError, ValueError)

    def test_carried_fields(self):
        """Errors keep their diagnostics."""
        assert NotInformativeError("x", rank_report="r").rank_report == "r"
        assert TrajectoryMismatchError("x", residual=0.5).residual == 0.5
        assert MaxStepsExceededError("x", steps=7).steps == 7
        assert DataFormatError("x", field="A").field == "A"

    def test_unknown_campaign_message_is_plain(self):
        """UnknownCampaignError prints without KeyError quoting."""
        assert str(UnknownCampaignError("unknown campaign 'x'")) == "unknown campaign 'x'"


# ============================================================================
# DOCUMENT HELPER TESTS
# ============================================================================

class TestDocumentHelpers:
    """Tests for JSON helpers."""

    def test_require_field_present(self):
        """Present fields are returned."""
        assert require_field({"n": 2}, "n") == 2

    def test_require_field_missing(self):
        """Missing and null fields raise with the field name."""
        with pytest.raises(DataFormatError) as exc:
            require_field({"n": None}, "n", "system")
        assert exc.value.field == "n"
        assert "system" in str(exc.value)

    def test_require_field_non_object(self):
        """Non-object documents are rejected."""
        with pytest.raises(DataFormatError):
            require_field([1, 2], "n")

    def test_dump_and_load(self, tmp_path):
        """dump_json writes sorted keys that load_json reads back."""
        path = dump_json({"b": 1, "a": [1.5]}, tmp_path / "sub" / "doc.json")
        assert path.read_text().index('"a"') < path.read_text().index('"b"')
        assert load_json(path) == {"a": [1.5], "b": 1}

    def test_load_missing_file(self, tmp_path):
        """Missing files raise DataFormatError."""
        with pytest.raises(DataFormatError, match="file not found"):
            load_json(tmp_path / "missing.json")

    def test_load_invalid_json(self, tmp_path):
        """Syntax errors report the line."""
        path = tmp_path / "bad.json"
        path.write_text('{"n": 2,\n')
        with pytest.raises(DataFormatError, match="invalid JSON"):
            load_json(path)

    def test_dump_is_valid_json(self, tmp_path):
        """Written documents end with a newline and parse."""
        path = dump_json({"version": 1}, tmp_path / "v.json")
        assert path.read_text().endswith("\n")
        assert json.loads(path.read_text()) == {"version": 1}
