#!/usr/bin/env python3
"""
Unit tests for system.py - Plants, reachability and classification.

Tests cover:
- LtiSystem construction and JSON round-trip
- simulate on hand-computed recursions, linearity
- reachable_subspace and reachable_dimension
- PBH classification against the reachability rank
- Seeded generators and adversarial initial states
"""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from system import (
    LtiSystem,
    adversarial_initial_state,
    classify,
    random_system,
    reachable_dimension,
    reachable_subspace,
    simulate,
    uncontrollable_modes,
)
from validation import DataFormatError, DimensionError, InfeasibleRequestError, SystemClass


INTEGRATOR_CHAIN = LtiSystem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
DIAG_STABLE_UNCONTROLLED = LtiSystem(np.diag([0.5, 2.0]), [[0.0], [1.0]])


# ============================================================================
# SYSTEM MODEL TESTS
# ============================================================================

class TestLtiSystem:
    """Tests for the LtiSystem value type."""

    def test_dimensions(self):
        """n and m come from the shapes of A and B."""
        sys_ = LtiSystem(np.eye(3), np.ones((3, 2)))
        assert (sys_.n, sys_.m) == (3, 2)

    def test_vector_b_is_a_column(self):
        """A flat B becomes a single input column."""
        assert LtiSystem(np.eye(2), [1.0, 0.0]).m == 1

    def test_shape_checks(self):
        """Non-square A and mismatched B are rejected."""
        with pytest.raises(DimensionError):
            LtiSystem(np.ones((2, 3)), np.ones((2, 1)))
        with pytest.raises(DimensionError):
            LtiSystem(np.eye(2), np.ones((3, 1)))

    def test_immutable_arrays(self):
        """A and B are read-only."""
        with pytest.raises(ValueError):
            INTEGRATOR_CHAIN.A[0, 0] = 1.0

    def test_closed_loop(self):
        """closed_loop returns A + B K and checks the gain shape."""
        K = np.array([[-0.1, -0.2]])
        np.testing.assert_allclose(INTEGRATOR_CHAIN.closed_loop(K), [[0.0, 1.0], [-0.1, -0.2]])
        with pytest.raises(DimensionError):
            INTEGRATOR_CHAIN.closed_loop(np.zeros((2, 2)))

    def test_distance(self):
        """distance is the Frobenius norm of the stacked difference."""
        other = LtiSystem(INTEGRATOR_CHAIN.A, [[0.0], [4.0]])
        assert INTEGRATOR_CHAIN.distance(other) == pytest.approx(3.0)

    def test_json_round_trip(self):
        """to_dict / from_dict preserve the matrices."""
        data = DIAG_STABLE_UNCONTROLLED.to_dict()
        assert data["version"] == 1
        restored = LtiSystem.from_dict(data)
        assert restored.distance(DIAG_STABLE_UNCONTROLLED) == 0.0

    def test_from_dict_missing_field(self):
        """A missing B names the field."""
        with pytest.raises(DataFormatError) as exc:
            LtiSystem.from_dict({"n": 1, "m": 1, "A": [[1.0]]})
        assert exc.value.field == "B"

    def test_from_dict_wrong_shape(self):
        """Shape mismatches against n and m name the field."""
        with pytest.raises(DataFormatError) as exc:
            LtiSystem.from_dict({"n": 2, "m": 1, "A": [[1.0]], "B": [[1.0], [0.0]]})
        assert exc.value.field == "A"

    def test_from_dict_bad_dimension(self):
        """n must be a positive integer."""
        with pytest.raises(DataFormatError) as exc:
            LtiSystem.from_dict({"n": "two", "m": 1, "A": [[1.0]], "B": [[1.0]]})
        assert exc.value.field == "n"


# ============================================================================
# SIMULATION TESTS
# ============================================================================

class TestSimulate:
    """Tests for simulate."""

    def test_scalar_integrator(self):
        """A = B = 1, x0 = 0, u = [1, 1] gives x = [0, 1, 2]."""
        x = simulate(LtiSystem([[1.0]], [[1.0]]), [0.0], [1.0, 1.0])
        np.testing.assert_array_equal(x.ravel(), [0.0, 1.0, 2.0])

    def test_zero_input_zero_state(self):
        """Zero input from zero stays at zero."""
        x = simulate(DIAG_STABLE_UNCONTROLLED, np.zeros(2), np.zeros((4, 1)))
        assert not np.any(x)
        assert x.shape == (5, 2)

    def test_integrator_chain(self):
        """Two steps of the chain of integrators."""
        x = simulate(INTEGRATOR_CHAIN, np.zeros(2), [1.0, 0.0])
        np.testing.assert_array_equal(x, [[0, 0], [0, 1], [1, 0]])

    def test_linearity(self):
        """Responses superpose in (x0, u)."""
        rng = np.random.default_rng(2)
        sys_ = random_system(SystemClass.CONTROLLABLE, 3, 2, rng_seed=4)
        x0, y0 = rng.standard_normal(3), rng.standard_normal(3)
        u, v = rng.standard_normal((5, 2)), rng.standard_normal((5, 2))
        np.testing.assert_allclose(
            simulate(sys_, x0, u) + simulate(sys_, y0, v),
            simulate(sys_, x0 + y0, u + v),
            atol=1e-10,
        )

    def test_initial_state_length(self):
        """x0 must live in R^n."""
        with pytest.raises(DimensionError):
            simulate(INTEGRATOR_CHAIN, np.zeros(3), [1.0])


# ============================================================================
# REACHABILITY TESTS
# ============================================================================

class TestReachableSubspace:
    """Tests for reachable_subspace."""

    def test_invariant_coordinate(self):
        """A = diag(1, 2), G = e1 reaches span{e1}."""
        R = reachable_subspace(np.diag([1.0, 2.0]), [1.0, 0.0])
        assert R.dim == 1
        assert R.contains_vector([1.0, 0.0])

    def test_identity_generator(self):
        """G = I reaches everything."""
        assert reachable_subspace(np.diag([1.0, 2.0]), np.eye(2)).is_full

    def test_chain(self):
        """G and AG span R^2 for the chain of integrators."""
        assert reachable_subspace(INTEGRATOR_CHAIN.A, INTEGRATOR_CHAIN.B).is_full

    def test_zero_generator(self):
        """A zero generator reaches nothing."""
        assert reachable_subspace(np.eye(2), np.zeros((2, 1))).dim == 0

    def test_initial_state_enlarges(self):
        """R(A, B) is contained in R(A, [B x0])."""
        rng = np.random.default_rng(3)
        for seed in range(10):
            sys_ = random_system(SystemClass.STABILIZABLE_NOT_CONTROLLABLE, 4, 1, rng_seed=seed)
            x0 = rng.standard_normal(4)
            small = reachable_subspace(sys_.A, sys_.B)
            large = reachable_subspace(sys_.A, np.column_stack([sys_.B, x0]))
            residuals = [large.residual(v) for v in small.basis.T]
            assert all(r < 1e-8 for r in residuals)

    def test_trajectory_stays_inside(self):
        """Every state from x0 lies in R(A, [B x0])."""
        rng = np.random.default_rng(5)
        sys_ = random_system(SystemClass.NOT_STABILIZABLE, 4, 1, rng_seed=2)
        x0 = adversarial_initial_state(sys_, rng_seed=1)
        R = reachable_subspace(sys_.A, np.column_stack([sys_.B, x0]))
        states = simulate(sys_, x0, rng.standard_normal((6, 1)))
        for x in states:
            assert R.residual(x) <= 1e-8 * (1.0 + np.linalg.norm(x))

    def test_reachable_dimension(self):
        """Hand cases for dim R(A, [B x0])."""
        assert reachable_dimension(DIAG_STABLE_UNCONTROLLED) == 1
        assert reachable_dimension(DIAG_STABLE_UNCONTROLLED, np.zeros(2)) == 1
        assert reachable_dimension(DIAG_STABLE_UNCONTROLLED, [1.0, 0.0]) == 2


# ============================================================================
# CLASSIFICATION TESTS
# ============================================================================

class TestClassify:
    """Tests for PBH classification."""

    def test_integrator_chain_controllable(self):
        """The chain of integrators is controllable."""
        assert classify(INTEGRATOR_CHAIN) is SystemClass.CONTROLLABLE
        assert uncontrollable_modes(INTEGRATOR_CHAIN) == []

    def test_stable_uncontrollable_mode(self):
        """diag(0.5, 2) with B = e2 is stabilizable, not controllable."""
        assert classify(DIAG_STABLE_UNCONTROLLED) is SystemClass.STABILIZABLE_NOT_CONTROLLABLE
        modes = uncontrollable_modes(DIAG_STABLE_UNCONTROLLED)
        assert len(modes) == 1 and modes[0] == pytest.approx(0.5)

    def test_no_input_authority(self):
        """diag(2, 0.5) with B = 0 is not stabilizable."""
        sys_ = LtiSystem(np.diag([2.0, 0.5]), np.zeros((2, 1)))
        assert classify(sys_) is SystemClass.NOT_STABILIZABLE

    def test_marginal_mode_not_stabilizable(self):
        """An uncontrollable mode on the unit circle is not stabilizable."""
        sys_ = LtiSystem(np.diag([1.0, 0.3]), [[0.0], [1.0]])
        assert classify(sys_) is SystemClass.NOT_STABILIZABLE

    def test_pbh_agrees_with_reachability(self):
        """classify says controllable exactly when R(A, B) = R^n."""
        rng = np.random.default_rng(11)
        classes = list(SystemClass)
        for trial in range(200):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 4))
            cls = classes[trial % 3]
            sys_ = random_system(cls, n, m, rng_seed=trial)
            controllable = reachable_subspace(sys_.A, sys_.B).is_full
            assert (classify(sys_) is SystemClass.CONTROLLABLE) == controllable


# ============================================================================
# GENERATOR TESTS
# ============================================================================

class TestGenerators:
    """Tests for random_system and adversarial_initial_state."""

    @pytest.mark.parametrize("cls, n, m, seed", [
        (SystemClass.CONTROLLABLE, 3, 1, 7),
        (SystemClass.STABILIZABLE_NOT_CONTROLLABLE, 2, 1, 1),
        (SystemClass.NOT_STABILIZABLE, 2, 1, 3),
    ])
    def test_requested_class(self, cls, n, m, seed):
        """Generated systems carry the requested class."""
        sys_ = random_system(cls, n, m, rng_seed=seed)
        assert (sys_.n, sys_.m) == (n, m)
        assert classify(sys_) is cls

    def test_deterministic_in_seed(self):
        """Same seed, same system."""
        a = random_system(SystemClass.STABILIZABLE_NOT_CONTROLLABLE, 4, 2, rng_seed=9)
        b = random_system(SystemClass.STABILIZABLE_NOT_CONTROLLABLE, 4, 2, rng_seed=9)
        assert a.distance(b) == 0.0

    def test_scalar_stabilizable_not_controllable_infeasible(self):
        """n = 1 has no stabilizable, uncontrollable systems."""
        with pytest.raises(InfeasibleRequestError):
            random_system(SystemClass.STABILIZABLE_NOT_CONTROLLABLE, 1, 1)

    def test_nonpositive_dimensions(self):
        """Dimensions must be positive."""
        with pytest.raises(InfeasibleRequestError):
            random_system(SystemClass.CONTROLLABLE, 0, 1)

    def test_adversarial_none_for_controllable(self):
        """Controllable plants have no adversarial initial state."""
        assert adversarial_initial_state(INTEGRATOR_CHAIN) is None

    def test_adversarial_hand_case(self):
        """diag(0.5, 2), B = e2: the returned x0 keeps R(A, [B x0]) one-dimensional."""
        x0 = adversarial_initial_state(DIAG_STABLE_UNCONTROLLED, rng_seed=0)
        assert x0 is not None
        assert reachable_dimension(DIAG_STABLE_UNCONTROLLED, x0) == 1

    def test_adversarial_random_plants(self):
        """Adversarial states leave R(A, [B x0]) proper for uncontrollable plants."""
        for seed in range(30):
            cls = (SystemClass.STABILIZABLE_NOT_CONTROLLABLE, SystemClass.NOT_STABILIZABLE)[seed % 2]
            sys_ = random_system(cls, 4, 2, rng_seed=seed)
            x0 = adversarial_initial_state(sys_, rng_seed=seed)
            assert reachable_dimension(sys_, x0) < sys_.n
