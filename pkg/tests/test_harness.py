#!/usr/bin/env python3
"""
Unit tests for harness.py - Monte-Carlo campaigns.

Tests cover:
- Every registered campaign passing on its own dimension ranges
- Determinism across runs and worker counts
- Single-trial reruns and the repro command
- Published campaign aliases
- Campaign spec parsing and validation
"""

import os
import sys

import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from harness import (
    CAMPAIGN_ALIASES,
    CAMPAIGN_REGISTRY,
    CampaignSpec,
    repro_command,
    resolve_campaign,
    run_campaign,
)
from validation import DataFormatError, UnknownCampaignError


def run(campaign, trials, n_range=(1, 4), m_range=(1, 3), seed=0, **kwargs):
    spec = CampaignSpec(campaign, campaign, trials, n_range, m_range, seed, **kwargs)
    return run_campaign(spec)


def assert_all_passed(report):
    messages = [f"trial {r.index}: {r.message}" for r in report.failures]
    assert report.passed, "\n".join(messages)
    assert report.pass_count == report.spec.trials


# ============================================================================
# CAMPAIGN TESTS
# ============================================================================

class TestIdentificationCampaigns:
    """Tests for the identification campaigns."""

    def test_identification_equivalence(self):
        """Verdicts agree across pk and equal the full-rank test."""
        assert_all_passed(run("identification-equivalence", 300))

    def test_pe_identification(self):
        """PE inputs of order n + 1 identify controllable plants."""
        assert_all_passed(run("pe-identification", 300, n_range=(1, 5), m_range=(1, 3)))

    def test_identification_impossible(self):
        """Adversarial starts keep rank X- below n."""
        assert_all_passed(run("identification-impossible", 100))


class TestOfflineCampaigns:
    """Tests for the offline design campaigns."""

    def test_universality_table(self):
        """Offline verdicts follow the existence table."""
        assert_all_passed(run("universality-table", 100))

    def test_pe_stabilization(self):
        """PE inputs of order n + 1 give stabilizing gains."""
        assert_all_passed(run("pe-stabilization", 300, n_range=(2, 5)))


class TestStabilizationCampaigns:
    """Tests for the stabilization campaigns."""

    def test_scalar_stabilization(self):
        """Scalar cases and scaling invariance."""
        assert_all_passed(run("scalar-stabilization", 60))

    def test_prior_knowledge_dispatch(self):
        """Full-rank X- gives the same verdict under every pk."""
        assert_all_passed(run("prior-knowledge-dispatch", 60))

    def test_reachable_image_equivalence(self):
        """The reachable-image and image-product conditions coincide."""
        assert_all_passed(run("reachable-image-equivalence", 300, n_range=(1, 6)))

    def test_gain_soundness(self):
        """Certified gains stabilize sampled consistent systems."""
        assert_all_passed(run("gain-soundness", 50))


class TestOnlineCampaigns:
    """Tests for the online design campaigns."""

    def test_online_length(self):
        """Online runs stop at dim R(A, [B x0]) + m."""
        assert_all_passed(run("online-length", 300, n_range=(1, 6)))

    def test_online_shortest(self):
        """Adversarial online runs have no informative proper prefix."""
        assert_all_passed(run("online-shortest", 100))

    def test_min_n_respected(self):
        """Campaigns needing uncontrollable plants draw n >= 2."""
        report = run("online-shortest", 20, n_range=(1, 1))
        assert all(r.n == 2 for r in report.records)


# ============================================================================
# RUNNER TESTS
# ============================================================================

class TestRunner:
    """Tests for determinism, workers and single-trial reruns."""

    def test_deterministic(self):
        """Same spec, same report apart from wall time."""
        a = run("online-length", 30, seed=7).to_dict(include_wall_time=False)
        b = run("online-length", 30, seed=7).to_dict(include_wall_time=False)
        assert a == b
        assert "wall_time" not in a

    def test_workers_do_not_change_results(self):
        """Threaded runs reproduce the sequential report."""
        a = run("identification-equivalence", 40, seed=3).to_dict(include_wall_time=False)
        b = run("identification-equivalence", 40, seed=3, workers=2).to_dict(include_wall_time=False)
        assert a == b

    def test_only_trial_reruns_one_record(self):
        """only_trial reproduces the matching record of the full run."""
        full = run("reachable-image-equivalence", 20, seed=11)
        single = run("reachable-image-equivalence", 20, seed=11, only_trial=13)
        assert len(single.records) == 1
        assert single.records[0].to_dict() == full.records[13].to_dict()

    def test_progress_callback(self):
        """progress is called once per trial."""
        seen = []
        run_campaign(CampaignSpec("p", "identification-equivalence", 5), progress=seen.append)
        assert sorted(r.index for r in seen) == [0, 1, 2, 3, 4]

    def test_unknown_campaign(self):
        """Unregistered ids raise."""
        with pytest.raises(UnknownCampaignError):
            run("no-such-campaign", 1)

    def test_registry_complete(self):
        """Every campaign has a description."""
        assert len(CAMPAIGN_REGISTRY) == 11
        assert all(entry.description for entry in CAMPAIGN_REGISTRY.values())

    def test_aliases_resolve(self):
        """Every published id points at a registered campaign."""
        assert len(CAMPAIGN_ALIASES) == 7
        for alias, campaign in CAMPAIGN_ALIASES.items():
            assert resolve_campaign(alias) is CAMPAIGN_REGISTRY[campaign]

    def test_alias_campaign_runs(self):
        """A spec naming a published id runs the mapped campaign."""
        spec = CampaignSpec.from_dict({"theorem": "thm8-forward", "trials": 20, "seed": 0})
        report = run_campaign(spec)
        assert_all_passed(report)
        assert report.spec.campaign == "thm8-forward"

    def test_unknown_campaign_lists_aliases(self):
        """The error names registry ids and aliases."""
        with pytest.raises(UnknownCampaignError) as exc:
            resolve_campaign("thm99")
        assert "lemma17-length" in str(exc.value)
        assert "online-length" in str(exc.value)

    def test_repro_command(self):
        """The repro command names the spec and trial."""
        assert repro_command("specs/ol.json", 4) == "pk-design campaign specs/ol.json --only-trial 4"


# ============================================================================
# SPEC TESTS
# ============================================================================

class TestCampaignSpec:
    """Tests for CampaignSpec parsing."""

    def test_from_dict(self):
        """dims, seed and trials are read from the document."""
        spec = CampaignSpec.from_dict({
            "name": "ol", "campaign": "online-length", "trials": 12,
            "dims": {"n": [2, 3], "m": 1}, "seed": 5,
        })
        assert spec.n_range == (2, 3)
        assert spec.m_range == (1, 1)
        assert spec.seed == 5

    def test_theorem_alias(self):
        """'theorem' is accepted in place of 'campaign'."""
        spec = CampaignSpec.from_dict({"theorem": "gain-soundness"})
        assert spec.campaign == "gain-soundness"
        assert spec.name == "gain-soundness"
        assert spec.trials == 100

    def test_missing_campaign(self):
        """A document without a campaign id is rejected."""
        with pytest.raises(DataFormatError):
            CampaignSpec.from_dict({"trials": 3})

    def test_invalid_trials(self):
        """Zero trials are rejected."""
        with pytest.raises(DataFormatError) as exc:
            CampaignSpec.from_dict({"campaign": "online-length", "trials": 0})
        assert exc.value.field == "trials"

    def test_invalid_range(self):
        """Empty dimension ranges are rejected."""
        with pytest.raises(DataFormatError):
            CampaignSpec("x", "online-length", n_range=(3, 2))

    def test_only_trial_out_of_range(self):
        """only_trial must index an existing trial."""
        with pytest.raises(DataFormatError):
            CampaignSpec("x", "online-length", trials=3, only_trial=3)

    def test_to_dict_omits_workers(self):
        """Workers do not appear in reports."""
        data = CampaignSpec("x", "online-length", workers=4).to_dict()
        assert "workers" not in data
        assert data["dims"] == {"n": [1, 4], "m": [1, 3]}
