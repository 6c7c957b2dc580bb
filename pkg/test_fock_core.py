#!/usr/bin/env python3
"""
Tests for the truncated Fock-space layer: operators, padded Gaussian
unitaries, leakage detection, partial traces and conditioning.

Usage:
    pytest test_fock_core.py -v
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from config import Tolerances
from errors import (InvalidArgumentError, InvalidStateError, TruncationOverflowError,
                    ZeroProbabilityError)
from fock_core import (DensityMatrix, GaussianUnitarySpec, ModeLayout, PureStateVector,
                       apply_gaussian_circuit, apply_gaussian_unitary, basis_state, condition,
                       expectation, fock_populations, gaussian_unitary_matrix, identity_effect,
                       ladder, lift, mean_photon_number, mixture, number_operator, partial_trace,
                       projector_effect, quadratures, required_dim, restrict, tensor, vacuum)
from state_factory import pair_state


def test_ladder_elements():
    a = ladder(5)
    for n in range(1, 5):
        assert a[n - 1, n] == pytest.approx(math.sqrt(n))
    comm = a @ a.conj().T - a.conj().T @ a
    # canonical commutator holds except on the last level
    assert np.allclose(np.diag(comm)[:-1], 1.0)


def test_number_operator_is_diagonal():
    assert np.allclose(number_operator(5), np.diag([0, 1, 2, 3, 4]))
    a = ladder(5)
    assert np.allclose(a.conj().T @ a, number_operator(5))


def test_two_level_ladder():
    assert np.allclose(ladder(2), [[0, 1], [0, 0]])


def test_quadrature_commutator_on_leading_block():
    x, p = quadratures(6)
    comm = x @ p - p @ x
    assert np.allclose(comm[:5, :5], 1j * np.eye(5))


def test_gaussian_unitary_matrix_is_unitary():
    layout = ModeLayout.of(30)
    for spec in (GaussianUnitarySpec.squeeze(0.4), GaussianUnitarySpec.displacement(0.5 + 0.2j),
                 GaussianUnitarySpec.phase(0.7)):
        u = gaussian_unitary_matrix(spec, layout)
        assert np.linalg.norm(u.conj().T @ u - np.eye(layout.total)) <= 1e-8


@pytest.mark.parametrize("T", [0.1, 0.5, 0.9])
def test_beamsplitter_matrix_is_unitary_and_number_preserving(T):
    layout = ModeLayout.of(6, 6)
    u = gaussian_unitary_matrix(GaussianUnitarySpec.beamsplitter(T), layout)
    assert np.linalg.norm(u.conj().T @ u - np.eye(layout.total)) <= 1e-10
    n = number_operator(6)
    total = np.kron(n, np.eye(6)) + np.kron(np.eye(6), n)
    assert np.linalg.norm(u @ total - total @ u) <= 1e-10


def test_full_transmission_is_identity():
    layout = ModeLayout.of(3, 3)
    psi = basis_state(layout, [1, 2])
    out = apply_gaussian_unitary(psi, GaussianUnitarySpec.beamsplitter(1.0))
    assert np.allclose(out.to_density().matrix, psi.to_density().matrix, atol=1e-10)


def test_balanced_splitter_bunches_photon_pair():
    layout = ModeLayout.of(3, 3)
    out = apply_gaussian_unitary(basis_state(layout, [1, 1]), GaussianUnitarySpec.beamsplitter(0.5))
    rho = out.to_density().matrix
    idx = np.ravel_multi_index((1, 1), layout.dims)
    assert abs(rho[idx, idx]) < 1e-10
    branch, p = condition(out, projector_effect(ModeLayout.of(3), 0), (1,))
    assert p == pytest.approx(0.5, abs=1e-10)
    assert np.allclose(branch.normalized().matrix, np.diag([0.0, 0.0, 1.0]), atol=1e-10)


def test_pair_state_marginal():
    beta = 0.3
    rho = partial_trace(pair_state(beta, ModeLayout.of(2, 2)), (0,))
    assert np.allclose(rho.matrix, np.diag([1 - beta, beta]))


def test_layout_rejects_small_dims():
    with pytest.raises(InvalidArgumentError):
        ModeLayout.of(1)
    with pytest.raises(InvalidArgumentError):
        ModeLayout(())


def test_squeezing_scales_x_variance():
    r = 0.3
    state = apply_gaussian_unitary(vacuum(ModeLayout.of(40)), GaussianUnitarySpec.squeeze(r))
    x, p = quadratures(40)
    assert expectation(state, x @ x).real == pytest.approx(math.exp(2 * r) / 2, abs=1e-8)
    assert expectation(state, p @ p).real == pytest.approx(math.exp(-2 * r) / 2, abs=1e-8)


def test_displacement_mean_field():
    alpha = 0.5 + 0.3j
    state = apply_gaussian_unitary(vacuum(ModeLayout.of(30)), GaussianUnitarySpec.displacement(alpha))
    assert expectation(state, ladder(30)) == pytest.approx(alpha, abs=1e-8)
    assert mean_photon_number(state) == pytest.approx(abs(alpha) ** 2, abs=1e-8)


def test_beamsplitter_transmits_single_photon():
    T = 0.3
    layout = ModeLayout.of(3, 3)
    out = apply_gaussian_unitary(basis_state(layout, [1, 0]), GaussianUnitarySpec.beamsplitter(T))
    pops = fock_populations(out, 0)
    assert pops[1] == pytest.approx(T, abs=1e-10)
    assert mean_photon_number(out) == pytest.approx(1.0, abs=1e-10)


def test_strong_squeezing_reports_overflow():
    with pytest.raises(TruncationOverflowError) as excinfo:
        apply_gaussian_unitary(vacuum(ModeLayout.of(6)), GaussianUnitarySpec.squeeze(1.5))
    assert excinfo.value.required_dim > 6
    assert excinfo.value.leakage > 0


def test_leakage_budget_is_configurable():
    loose = Tolerances(truncation_leakage=0.5)
    state = apply_gaussian_unitary(vacuum(ModeLayout.of(6)), GaussianUnitarySpec.squeeze(0.8), loose)
    assert state.norm_squared < 1.0


def test_required_dim_from_tail():
    pops = np.array([0.5, 0.3, 0.2 - 1e-10, 1e-10])
    assert required_dim(pops, 1e-8) == 3


def test_lift_and_restrict_are_inverse():
    psi = PureStateVector(ModeLayout.of(3), np.array([0.6, 0.0, 0.8]))
    big = lift(psi, ModeLayout.of(7))
    assert big.layout.dims == (7,)
    assert np.allclose(restrict(big, psi.layout).amplitudes, psi.amplitudes)


def test_partial_trace_of_product():
    a = PureStateVector(ModeLayout.of(2), np.array([0.6, 0.8]))
    b = basis_state(ModeLayout.of(3), [2])
    rho = partial_trace(tensor(a, b), (0,))
    assert np.allclose(rho.matrix, a.to_density().matrix)
    swapped = partial_trace(tensor(a, b).to_density(), (1, 0))
    assert swapped.layout.dims == (3, 2)
    assert swapped.trace == pytest.approx(1.0)


def test_condition_identity_is_partial_trace():
    psi = PureStateVector(ModeLayout.of(2, 2), np.array([1, 0, 0, 1]) / math.sqrt(2))
    out, p = condition(psi, identity_effect(ModeLayout.of(2)), (1,))
    assert p == pytest.approx(1.0)
    assert out.unnormalized
    assert np.allclose(out.matrix, partial_trace(psi, (0,)).matrix)


def test_condition_projector_selects_branch():
    psi = PureStateVector(ModeLayout.of(2, 2), np.array([math.sqrt(0.9), 0, 0, math.sqrt(0.1)]))
    out, p = condition(psi, projector_effect(ModeLayout.of(2), 1), (1,))
    assert p == pytest.approx(0.1)
    assert np.allclose(out.normalized().matrix, np.diag([0.0, 1.0]))


def test_condition_zero_probability():
    psi = basis_state(ModeLayout.of(2, 2), [1, 0])
    with pytest.raises(ZeroProbabilityError):
        condition(psi, projector_effect(ModeLayout.of(2), 1), (1,))


def test_condition_requires_unmeasured_mode():
    psi = basis_state(ModeLayout.of(2), [0])
    with pytest.raises(InvalidArgumentError):
        condition(psi, identity_effect(ModeLayout.of(2)), (0,))


def test_non_hermitian_density_rejected():
    with pytest.raises(InvalidStateError):
        DensityMatrix(ModeLayout.of(2), np.array([[1.0, 0.5], [0.0, 0.0]]))


def test_invalid_unitary_specs():
    with pytest.raises(InvalidArgumentError):
        GaussianUnitarySpec.beamsplitter(1.5)
    with pytest.raises(InvalidArgumentError):
        GaussianUnitarySpec("twist", (0,), {})
    with pytest.raises(InvalidArgumentError):
        apply_gaussian_unitary(vacuum(ModeLayout.of(4)), GaussianUnitarySpec.phase(0.1, mode=2))


def test_mixture_trace():
    rho = mixture([basis_state(ModeLayout.of(3), [0]), basis_state(ModeLayout.of(3), [2])], [0.25, 0.75])
    assert rho.trace == pytest.approx(1.0)
    assert mean_photon_number(rho) == pytest.approx(1.5)
    assert rho.purity() == pytest.approx(0.625)


@given(st.floats(min_value=0.0, max_value=2 * math.pi), st.integers(min_value=0, max_value=3))
@settings(max_examples=25, deadline=None)
def test_phase_rotation_keeps_populations(phi, seed):
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    psi = PureStateVector(ModeLayout.of(6), amps).normalized()
    out = apply_gaussian_unitary(psi, GaussianUnitarySpec.phase(phi))
    assert np.allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes), atol=1e-12)


@given(st.floats(min_value=-0.3, max_value=0.3), st.floats(min_value=-0.3, max_value=0.3))
@settings(max_examples=20, deadline=None)
def test_circuit_then_inverse_is_identity(re, im):
    psi = basis_state(ModeLayout.of(20), [1])
    specs = [GaussianUnitarySpec.displacement(complex(re, im)), GaussianUnitarySpec.squeeze(0.2, 0.4)]
    inverse = [GaussianUnitarySpec.squeeze(-0.2, 0.4), GaussianUnitarySpec.displacement(-complex(re, im))]
    back = apply_gaussian_circuit(apply_gaussian_circuit(psi, specs), inverse)
    assert abs(np.vdot(psi.amplitudes, back.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-7)
