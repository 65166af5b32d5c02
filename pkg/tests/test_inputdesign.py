#!/usr/bin/env python3
"""
Unit tests for inputdesign.py - Persistency of excitation and universal inputs.

Tests cover:
- PE checks and the PE order of hand signals
- PE input generation and its length bound
- The universality table over goals and prior knowledge
- Offline against online experiment lengths
"""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from inputdesign import (
    compare_experiment_lengths,
    generate_pe_input,
    is_persistently_exciting,
    minimum_pe_length,
    pe_order,
    universal_inputs_exist,
    universality_verdict,
)
from system import LtiSystem, random_system
from validation import Goal, InfeasibleRequestError, PriorKnowledge, SystemClass, Universality


# ============================================================================
# PERSISTENCY OF EXCITATION TESTS
# ============================================================================

class TestPeOrder:
    """Tests for pe_order and is_persistently_exciting."""

    def test_pulse(self):
        """u = [0, 1, 0] is PE of order 2 but not 3."""
        assert pe_order([0.0, 1.0, 0.0]) == 2
        assert is_persistently_exciting([0.0, 1.0, 0.0], 2)
        assert not is_persistently_exciting([0.0, 1.0, 0.0], 3)

    def test_constant(self):
        """A constant scalar signal has order 1."""
        assert pe_order([1.0, 1.0, 1.0]) == 1

    def test_zero(self):
        """The zero signal has order 0."""
        assert pe_order(np.zeros(6)) == 0

    def test_constant_vector_signal(self):
        """A constant signal in R^2 is not even PE of order 1."""
        assert pe_order(np.ones((5, 2))) == 0

    def test_too_short_for_order(self):
        """Signals shorter than the order are not PE by convention."""
        assert not is_persistently_exciting([1.0, -1.0], 3)

    def test_order_zero_trivial(self):
        """Every signal is PE of order 0."""
        assert is_persistently_exciting([0.0], 0)

    def test_minimum_length(self):
        """k(m+1) - 1 samples are needed for order k."""
        assert minimum_pe_length(1, 2) == 3
        assert minimum_pe_length(2, 3) == 8


class TestGeneratePeInput:
    """Tests for generate_pe_input."""

    def test_scalar_order_two(self):
        """(m = 1, k = 2) gives a length-3 signal of order at least 2."""
        u = generate_pe_input(1, 2)
        assert u.shape == (3, 1)
        assert pe_order(u) >= 2

    def test_default_length(self):
        """(m = 2, k = 3) defaults to length 8."""
        u = generate_pe_input(2, 3)
        assert u.shape == (8, 2)
        assert is_persistently_exciting(u, 3)

    def test_too_short(self):
        """(m = 1, k = 2, T = 2) is infeasible."""
        with pytest.raises(InfeasibleRequestError):
            generate_pe_input(1, 2, length=2)

    def test_longer_signal(self):
        """Longer signals keep the order."""
        u = generate_pe_input(3, 4, length=40, rng_seed=5)
        assert u.shape == (40, 3)
        assert pe_order(u) >= 4

    def test_deterministic(self):
        """Same seed, same signal."""
        np.testing.assert_array_equal(generate_pe_input(2, 2, rng_seed=3), generate_pe_input(2, 2, rng_seed=3))

    def test_invalid_arguments(self):
        """m and k must be positive."""
        with pytest.raises(InfeasibleRequestError):
            generate_pe_input(0, 2)


# ============================================================================
# UNIVERSALITY TESTS
# ============================================================================

class TestUniversality:
    """Tests for the offline verdict table."""

    def test_existence_table(self):
        """Universal inputs exist exactly for (id, cont), (stab, cont) and (stab, stab)."""
        assert universal_inputs_exist(Goal.IDENTIFICATION, PriorKnowledge.CONTROLLABLE)
        assert not universal_inputs_exist(Goal.IDENTIFICATION, PriorKnowledge.STABILIZABLE)
        assert not universal_inputs_exist(Goal.IDENTIFICATION, PriorKnowledge.ALL)
        assert universal_inputs_exist(Goal.STABILIZATION, PriorKnowledge.CONTROLLABLE)
        assert universal_inputs_exist(Goal.STABILIZATION, PriorKnowledge.STABILIZABLE)
        assert not universal_inputs_exist(Goal.STABILIZATION, PriorKnowledge.ALL)

    def test_pe_signal_universal_for_identification(self):
        """A PE input of order n + 1 is universal for (id, cont)."""
        u = generate_pe_input(1, 4)
        verdict = universality_verdict(u, 1, 3, "id", "cont")
        assert verdict.universal
        assert verdict.pe_order_required == 4
        assert verdict.hankel_rank_report.rank == 4

    def test_identification_under_stabilizable_impossible(self):
        """No input is universal for identification under pk = stab."""
        u = generate_pe_input(2, 6, rng_seed=1)
        verdict = universality_verdict(u, 2, 2, Goal.IDENTIFICATION, PriorKnowledge.STABILIZABLE)
        assert verdict.verdict is Universality.IMPOSSIBLE
        assert verdict.impossible

    def test_constant_signal_not_universal(self):
        """A constant signal is not universal for (stab, stab)."""
        verdict = universality_verdict(np.ones(10), 1, 1, Goal.STABILIZATION, PriorKnowledge.STABILIZABLE)
        assert verdict.verdict is Universality.NOT_UNIVERSAL
        assert verdict.pe_order == 1

    def test_stabilization_without_prior_impossible(self):
        """(stab, all) is impossible for every input."""
        u = generate_pe_input(1, 3)
        assert universality_verdict(u, 1, 2, "stab", "all").impossible

    def test_short_signal_has_no_hankel_report(self):
        """Signals shorter than n + 1 carry no Hankel rank report."""
        verdict = universality_verdict([1.0, 2.0], 1, 3, "stab", "cont")
        assert verdict.hankel_rank_report is None
        assert verdict.verdict is Universality.NOT_UNIVERSAL

    def test_verdict_serializes(self):
        """to_dict carries the tags and orders."""
        data = universality_verdict(generate_pe_input(1, 2), 1, 1, "id", "cont").to_dict()
        assert data["verdict"] == "universal"
        assert data["goal"] == "id" and data["pk"] == "cont"


# ============================================================================
# EXPERIMENT LENGTH TESTS
# ============================================================================

class TestCompareLengths:
    """Tests for compare_experiment_lengths."""

    def test_controllable_plant(self):
        """Offline (n+1)(m+1)-1 against online n + m."""
        sys_ = random_system(SystemClass.CONTROLLABLE, 3, 2, rng_seed=1)
        comparison = compare_experiment_lengths(sys_, np.ones(3))
        assert comparison.offline_length == 11
        assert comparison.online_length == 5
        assert comparison.saved_samples == 6

    def test_uncontrollable_plant_from_rest(self):
        """Starting at rest, only R(A, B) is explored online."""
        sys_ = LtiSystem(np.diag([0.5, 2.0]), [[0.0], [1.0]])
        comparison = compare_experiment_lengths(sys_, np.zeros(2))
        assert comparison.online_length == 2
        assert comparison.to_dict()["offline_length"] == 5
