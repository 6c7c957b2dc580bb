#!/usr/bin/env python3
"""
Tests for the monotone axiom harness and the averaged convex-roof gap.

Usage:
    pytest test_property_checks.py -v
    pytest test_property_checks.py -v -m slow   # full 1000-trial gap experiment
"""

import json
import math

import numpy as np
import pytest

from errors import ConvergenceFailure, InvalidArgumentError
from fock_core import ModeLayout, PureStateVector
import gaussian_calculus
import property_checks
from property_checks import (GapRecord, RandomStateConfig, convex_roof_check, convex_roof_gap,
                             random_bipartite_pure, summarize_gaps, trial_rng)

GAP_FLOOR = -1e-6


@pytest.fixture(scope="module")
def suite_report():
    return property_checks.monotone_axiom_suite(seed=7, trials=1)


def test_trial_streams_are_reproducible_and_independent():
    a = trial_rng(5, 3).standard_normal(4)
    b = trial_rng(5, 3).standard_normal(4)
    c = trial_rng(5, 4).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_random_bipartite_state():
    cfg = RandomStateConfig(local_dim=3, trials=2, seed=1)
    psi = random_bipartite_pure(cfg, 1)
    assert psi.layout.dims == (3, 3)
    assert psi.norm_squared == pytest.approx(1.0)
    assert property_checks.state_digest(psi) == property_checks.state_digest(random_bipartite_pure(cfg, 1))
    with pytest.raises(InvalidArgumentError):
        RandomStateConfig(local_dim=1)


@pytest.mark.parametrize("detector", ["het", "hom"])
def test_vacuum_product_has_no_gap(detector):
    psi = PureStateVector(ModeLayout.of(2, 2), np.array([1.0, 0.0, 0.0, 0.0]))
    assert convex_roof_gap(psi, detector).delta_gap == pytest.approx(0.0, abs=1e-8)


def test_product_state_gap_is_measured_mode_delta():
    # conditioning a product state leaves mode B untouched
    vec = np.kron([0.6, 0.8], [0.0, 1.0])
    psi = PureStateVector(ModeLayout.of(2, 2), vec)
    record = convex_roof_gap(psi, "het")
    assert record.coverage >= property_checks.COVERAGE
    expected = gaussian_calculus.delta_pure(psi, check_tail=False) - gaussian_calculus.entropy_h(3.0)
    assert record.delta_gap == pytest.approx(expected, abs=1e-5)


def test_gap_rejects_unknown_detector():
    psi = random_bipartite_pure(RandomStateConfig(2))
    with pytest.raises(InvalidArgumentError):
        convex_roof_gap(psi, "photon")


@pytest.mark.parametrize("local_dim", [2, 3])
def test_convex_roof_gap_is_non_negative(local_dim):
    records = convex_roof_check([local_dim], trials=3, seed=0)
    assert len(records) == 6
    assert {r.detector for r in records} == {"het", "hom"}
    assert min(r.delta_gap for r in records) >= GAP_FLOOR


@pytest.mark.slow
def test_convex_roof_gap_full_experiment():
    records = convex_roof_check([2, 3, 4, 5], trials=1000, seed=0)
    summary = summarize_gaps(records)
    assert all(entry["min"] >= GAP_FLOOR for entry in summary.values())
    for detector in ("het", "hom"):
        assert summary[f"{detector}:N=5"]["mean"] > summary[f"{detector}:N=2"]["mean"]


def test_summarize_gaps():
    records = [GapRecord("het", 2, t, gap, 1.0, 1.0, "x") for t, gap in enumerate([0.1, 0.3, 0.2])]
    records.append(GapRecord("hom", 2, 0, 0.5, 1.0, 1.0, "y"))
    summary = summarize_gaps(records)
    assert summary["het:N=2"] == {"detector": "het", "N": 2, "trials": 3, "min": 0.1,
                                  "mean": pytest.approx(0.2), "max": 0.3}
    assert summary["hom:N=2"]["trials"] == 1


def test_monotone_suite_passes(suite_report):
    assert suite_report.passed, suite_report.failures()
    names = [check.name for check in suite_report.checks]
    assert names == list(property_checks.SUITE_TOLERANCES)


def test_report_json_carries_seed(suite_report):
    payload = json.loads(suite_report.to_json())
    assert payload["seed"] == 7
    assert payload["rng"] == property_checks.RNG_ALGORITHM
    assert len(payload["checks"]) == 7


def test_same_seed_gives_identical_report_bytes(suite_report):
    again = property_checks.monotone_axiom_suite(seed=7, trials=1)
    assert again.to_json().encode() == suite_report.to_json().encode()


def test_composites_are_integrated_without_factorizing(monkeypatch):
    calls = []

    def fake_negativity(state, tol=None, **kwargs):
        calls.append((state.layout.n_modes, kwargs.get("factorize", True)))
        return 0.5

    monkeypatch.setattr(property_checks.phase_space, "negativity", fake_negativity)
    monkeypatch.setattr(property_checks.phase_space, "wln", lambda state, tol=None: math.log2(1.5))
    report = property_checks.monotone_axiom_suite(seed=3, trials=1)
    joint = [modes for modes, factorize in calls if not factorize]
    # six Gaussian partners plus two products
    assert joint == [2] * 8
    composition = next(c for c in report.checks if c.name == "gaussian_composition_invariance")
    assert composition.passed and composition.cases == 6


def test_failing_numerics_are_recorded_per_check():
    def broken(state):
        raise ConvergenceFailure("no convergence", {"where": "test"})

    report = property_checks.monotone_axiom_suite(seed=1, trials=1, negativity_fn=broken, wln_fn=lambda s: 0.0)
    assert not report.passed
    assert [c.name for c in report.checks] == list(property_checks.SUITE_TOLERANCES)
    for check in report.checks:
        assert not check.passed
        assert check.cases == 0
        assert check.detail.startswith("ConvergenceFailure")


def test_corrupted_negativity_is_caught():
    report = property_checks.sign_flip_self_test(seed=7)
    assert not report.passed
    assert "negativity_convexity" in report.failures() or "partial_trace_monotonicity" in report.failures()


def test_state_zoo_is_normalized():
    for name, state in property_checks.state_zoo().items():
        trace = state.to_density().trace
        assert math.isclose(trace, 1.0, abs_tol=1e-8), name


def test_haar_states_have_expected_mean_overlap():
    cfg = RandomStateConfig(local_dim=3, trials=800, seed=2)
    states = [random_bipartite_pure(cfg, t).amplitudes for t in range(800)]
    overlaps = [abs(np.vdot(a, b)) ** 2 for a, b in zip(states[::2], states[1::2])]
    assert np.mean(overlaps) == pytest.approx(1 / 9, abs=0.03)
