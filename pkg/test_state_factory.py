#!/usr/bin/env python3
"""
Tests for state construction: the text grammar, closed-form families,
auto-growing cutoffs and the squeezing/cubic-phase identity.

Usage:
    pytest test_state_factory.py -v
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import StateSpecParseError, TruncationOverflowError, UndefinedStateError
from fock_core import ModeLayout, PureStateVector, expectation, fidelity_pure, ladder, mean_photon_number
import state_factory
from state_factory import StateSpec, build, build_text, parse_state


def test_parse_state_families():
    assert parse_state("fock:1") == StateSpec("fock", {"n": 1})
    coherent = parse_state("coherent:0.5")
    assert coherent.params == {"re": 0.5, "im": 0.0}
    sub = parse_state("sub:1.0,0.5")
    assert sub.params["psi"] == 0.0
    cat = parse_state("cat:2,0.7853981634,3.1415926536")
    assert cat.params["alpha"] == 2.0
    assert parse_state("pair:0.1").n_modes == 2


@pytest.mark.parametrize("text", ["fock", "banana:1", "fock:1.5", "cubic:0.1", "cubic:a,b",
                                  "lossy1:1.5", "fock:1,2"])
def test_parse_state_rejects_malformed(text):
    with pytest.raises(StateSpecParseError) as excinfo:
        parse_state(text)
    # the message reminds the user of the grammar
    assert "fock:n" in str(excinfo.value)


def test_fock_and_coherent_states():
    one = build_text("fock:1", dim=4)
    assert np.allclose(one.amplitudes, [0, 1, 0, 0])
    alpha = 0.8 - 0.4j
    coherent = build(StateSpec("coherent", {"re": alpha.real, "im": alpha.imag}))
    assert coherent.norm_squared == pytest.approx(1.0, abs=1e-8)
    assert expectation(coherent, ladder(coherent.layout.dims[0])) == pytest.approx(alpha, abs=1e-7)


def test_explicit_layout_does_not_grow():
    with pytest.raises(TruncationOverflowError):
        build(StateSpec("coherent", {"re": 3.0}), ModeLayout.of(5))


def test_auto_layout_grows_to_fit():
    state = build(StateSpec("squeezed", {"r": 1.2}))
    assert state.norm_squared == pytest.approx(1.0, abs=1e-7)
    assert mean_photon_number(state) == pytest.approx(math.sinh(1.2) ** 2, rel=1e-5)


def test_trivial_cubic_is_vacuum():
    state = build_text("cubic:0,0", dim=4)
    assert np.allclose(state.amplitudes, [1, 0, 0, 0])


def test_single_branch_cat_is_coherent():
    cat = build_text("cat:1.2,0,2.0", dim=25)
    target = PureStateVector(ModeLayout.of(25), state_factory.coherent_amplitudes(1.2, 25))
    assert fidelity_pure(target, cat) == pytest.approx(1.0, abs=1e-10)


def test_odd_cat_has_odd_parity():
    state = build_text("cat:1.5,0.7853981634,3.1415926536")
    assert state.norm_squared == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(state.amplitudes[0::2])) < 1e-9


def test_cancelling_cat_is_undefined():
    with pytest.raises(UndefinedStateError):
        build_text("cat:0,0.7853981634,3.1415926536")


def test_subtraction_from_vacuum_is_undefined():
    with pytest.raises(UndefinedStateError):
        build_text("sub:0,0")
    with pytest.raises(UndefinedStateError):
        state_factory.two_level_sub(0.0, 0.0)


def test_subtraction_from_coherent_is_coherent():
    sub = build(StateSpec("sub", {"alpha": 0.7, "r": 0.0}), ModeLayout.of(25))
    target = PureStateVector(ModeLayout.of(25), state_factory.coherent_amplitudes(0.7, 25))
    assert fidelity_pure(target, sub) == pytest.approx(1.0, abs=1e-10)


def test_addition_to_vacuum_is_single_photon():
    add = build(StateSpec("add", {"alpha": 0.0, "r": 0.0}), ModeLayout.of(6))
    assert abs(add.amplitudes[1]) == pytest.approx(1.0)


def test_two_level_states_are_normalized():
    sub = state_factory.two_level_sub(1.0, 0.5)
    add = state_factory.two_level_add(1.0, 0.5)
    assert sub.norm_squared == pytest.approx(1.0)
    assert add.norm_squared == pytest.approx(1.0)
    assert sub.layout.dims == (3,)
    qubit = state_factory.qubit_state(0.3)
    assert mean_photon_number(qubit) == pytest.approx(0.3)


def test_thermal_state():
    rho = build_text("thermal:0.5")
    assert rho.trace == pytest.approx(1.0, abs=1e-8)
    assert mean_photon_number(rho) == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(TruncationOverflowError):
        state_factory.thermal(5.0, ModeLayout.of(10))


def test_lossy_single_photon():
    rho = build_text("lossy1:0.8", dim=3)
    assert np.allclose(np.diag(rho.matrix).real, [0.2, 0.8, 0.0])


def test_pair_state_amplitudes():
    psi = build_text("pair:0.1", dim=2)
    assert np.allclose(np.abs(psi.amplitudes) ** 2, [0.9, 0, 0, 0.1])


@pytest.mark.parametrize("r_prime", [0.1, 0.2, 0.4])
def test_squeezing_moves_cubic_strength(r_prime):
    fidelity = state_factory.verify_squeezing_cubic_identity(0.05, 0.0, r_prime)
    assert fidelity >= 1 - 1e-5


def test_energy_optimal_squeezing_minimizes_energy():
    u = 0.6

    def energy(r):
        gamma = u * math.exp(-3 * r)
        return StateSpec("cubic", {"gamma": gamma, "r": r}).estimated_nbar()

    r_star = state_factory.energy_optimal_squeezing(u)
    assert energy(r_star) <= energy(r_star + 0.02)
    assert energy(r_star) <= energy(r_star - 0.02)


def test_random_circuit_is_reproducible():
    a = state_factory.random_gaussian_circuit(np.random.default_rng(3), n_modes=2, depth=5)
    b = state_factory.random_gaussian_circuit(np.random.default_rng(3), n_modes=2, depth=5)
    assert a == b


@given(st.floats(min_value=0.3, max_value=2.0), st.floats(min_value=0.1, max_value=1.4),
       st.floats(min_value=0.0, max_value=2 * math.pi))
@settings(max_examples=20, deadline=None)
def test_cat_closed_form_normalization(alpha, phi, theta):
    state = build(StateSpec("cat", {"alpha": alpha, "phi": phi, "theta": theta}))
    assert state.norm_squared == pytest.approx(1.0, abs=1e-7)
