"""Truncated Fock-space linear algebra.

States are immutable value objects over a ``ModeLayout``. Gaussian unitaries
are matrix exponentials of quadratic generators built from truncated ladder
matrices; they are evaluated in a padded space so population pushed past the
cutoff can be measured and reported instead of silently wrapped around.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm

from config import DEFAULT_TOLERANCES, Tolerances
from errors import InvalidArgumentError, InvalidStateError, TruncationOverflowError, ZeroProbabilityError

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def _frozen(array, dtype=complex):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def fsum_real(values) -> float:
    """Order-independent, correctly rounded sum of a real array."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


@dataclass(frozen=True)
class ModeLayout:
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise InvalidArgumentError("a layout needs at least one mode")
        if any(d < 2 for d in dims):
            raise InvalidArgumentError(f"every mode dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, *dims):
        return cls(tuple(dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def concat(self, other: "ModeLayout") -> "ModeLayout":
        return ModeLayout(self.dims + other.dims)

    def subset(self, modes: Sequence[int]) -> "ModeLayout":
        return ModeLayout(tuple(self.dims[m] for m in modes))

    def check_modes(self, modes: Sequence[int]):
        modes = tuple(int(m) for m in modes)
        if len(set(modes)) != len(modes):
            raise InvalidArgumentError(f"mode indices must be distinct, got {modes}")
        for m in modes:
            if not 0 <= m < self.n_modes:
                raise InvalidArgumentError(f"mode index {m} out of range for {self.n_modes} modes")
        return modes


@dataclass(frozen=True)
class PureStateVector:
    layout: ModeLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).ravel()
        if amps.size != self.layout.total:
            raise InvalidArgumentError(f"{amps.size} amplitudes do not fit layout {self.layout.dims}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_squared(self) -> float:
        return fsum_real(np.abs(self.amplitudes) ** 2)

    def normalized(self) -> "PureStateVector":
        norm = math.sqrt(self.norm_squared)
        if norm == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return PureStateVector(self.layout, self.amplitudes / norm)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True)
class DensityMatrix:
    layout: ModeLayout
    matrix: np.ndarray
    unnormalized: bool = False

    def __post_init__(self):
        mat = _frozen(self.matrix)
        n = self.layout.total
        if mat.shape != (n, n):
            raise InvalidArgumentError(f"matrix shape {mat.shape} does not fit layout {self.layout.dims}")
        scale = max(1.0, float(np.max(np.abs(mat))) if mat.size else 1.0)
        if np.max(np.abs(mat - mat.conj().T)) > DEFAULT_TOLERANCES.hermiticity * scale:
            raise InvalidStateError("density matrix is not Hermitian")
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return fsum_real(np.real(np.diag(self.matrix)))

    def normalized(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0.0:
            raise InvalidStateError("cannot normalize a state with non-positive trace")
        return DensityMatrix(self.layout, self.matrix / tr, unnormalized=False)

    def to_density(self) -> "DensityMatrix":
        return self

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, tol: float = 1e-9) -> bool:
        return bool(self.eigenvalues().min() >= -tol)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


State = Union[PureStateVector, DensityMatrix]


@dataclass(frozen=True)
class GaussianUnitarySpec:
    """One elementary Gaussian unitary acting on ``modes``.

    kinds and parameters:
      displacement: alpha
      squeeze: r, psi
      beamsplitter: T, theta (default pi)
      phase: phi
    """

    kind: str
    modes: Tuple[int, ...]
    params: dict = field(default_factory=dict)

    ARITY = {"displacement": 1, "squeeze": 1, "phase": 1, "beamsplitter": 2}

    def __post_init__(self):
        if self.kind not in self.ARITY:
            raise InvalidArgumentError(f"unknown Gaussian unitary kind {self.kind!r}")
        modes = tuple(int(m) for m in self.modes)
        if len(modes) != self.ARITY[self.kind]:
            raise InvalidArgumentError(f"{self.kind} acts on {self.ARITY[self.kind]} mode(s), got {modes}")
        if len(set(modes)) != len(modes):
            raise InvalidArgumentError("beamsplitter modes must be distinct")
        if self.kind == "beamsplitter":
            T = float(self.params.get("T", 0.5))
            if not 0.0 <= T <= 1.0:
                raise InvalidArgumentError(f"transmissivity must lie in [0, 1], got {T}")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def displacement(cls, alpha, mode=0):
        return cls("displacement", (mode,), {"alpha": complex(alpha)})

    @classmethod
    def squeeze(cls, r, psi=0.0, mode=0):
        return cls("squeeze", (mode,), {"r": float(r), "psi": float(psi)})

    @classmethod
    def beamsplitter(cls, T, theta=math.pi, modes=(0, 1)):
        return cls("beamsplitter", tuple(modes), {"T": float(T), "theta": float(theta)})

    @classmethod
    def phase(cls, phi, mode=0):
        return cls("phase", (mode,), {"phi": float(phi)})


@dataclass(frozen=True)
class PovmEffect:
    layout: ModeLayout
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        mat = _frozen(self.matrix)
        n = self.layout.total
        if mat.shape != (n, n):
            raise InvalidArgumentError(f"effect shape {mat.shape} does not fit layout {self.layout.dims}")
        if np.max(np.abs(mat - mat.conj().T)) > DEFAULT_TOLERANCES.hermiticity:
            raise InvalidStateError(f"effect {self.label!r} is not Hermitian")
        object.__setattr__(self, "matrix", mat)

    def check_bounds(self, tol: float = 1e-9) -> bool:
        ev = np.linalg.eigvalsh(self.matrix)
        return bool(ev.min() >= -tol and ev.max() <= 1.0 + tol)


# --- operators -----------------------------------------------------------

def ladder(dim: int) -> np.ndarray:
    """Annihilation matrix with a[n-1, n] = sqrt(n)."""
    if int(dim) < 2:
        raise InvalidArgumentError(f"ladder needs dim >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, int(dim), dtype=float)), k=1).astype(complex)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(int(dim), dtype=float)).astype(complex)


def quadratures(dim: int):
    a = ladder(dim)
    ad = a.conj().T
    return (a + ad) / SQRT2, (a - ad) / (1j * SQRT2)


def embed(op: np.ndarray, mode: int, layout: ModeLayout) -> np.ndarray:
    """Lift a single-mode operator to the full layout."""
    factors = [op if k == mode else np.eye(d, dtype=complex) for k, d in enumerate(layout.dims)]
    return reduce(np.kron, factors)


def mode_ladders(layout: ModeLayout):
    return [embed(ladder(d), k, layout) for k, d in enumerate(layout.dims)]


def gaussian_generator(spec: GaussianUnitarySpec, layout: ModeLayout) -> np.ndarray:
    """Anti-Hermitian generator G with U = exp(G)."""
    layout.check_modes(spec.modes)
    p = spec.params
    if spec.kind == "beamsplitter":
        i, j = spec.modes
        a1 = embed(ladder(layout.dims[i]), i, layout)
        a2 = embed(ladder(layout.dims[j]), j, layout)
        phi = math.acos(math.sqrt(p.get("T", 0.5)))
        phase = np.exp(1j * p.get("theta", math.pi))
        return phi * (phase * a1.conj().T @ a2 - np.conj(phase) * a1 @ a2.conj().T)
    (m,) = spec.modes
    a = embed(ladder(layout.dims[m]), m, layout)
    ad = a.conj().T
    if spec.kind == "displacement":
        alpha = complex(p.get("alpha", 0.0))
        return alpha * ad - np.conj(alpha) * a
    if spec.kind == "squeeze":
        xi = p.get("r", 0.0) * np.exp(1j * p.get("psi", 0.0))
        return 0.5 * xi * ad @ ad - 0.5 * np.conj(xi) * a @ a
    return -1j * p.get("phi", 0.0) * ad @ a


def gaussian_unitary_matrix(spec: GaussianUnitarySpec, layout: ModeLayout) -> np.ndarray:
    return expm(gaussian_generator(spec, layout))


# --- embedding into padded spaces --------------------------------------------

def pad_layout(layout: ModeLayout, extra=None) -> ModeLayout:
    if extra is None:
        return ModeLayout(tuple(d + (max(10, d) if layout.n_modes == 1 else max(6, d // 2))
                                for d in layout.dims))
    return ModeLayout(tuple(d + int(extra) for d in layout.dims))


def _retained_index(small: ModeLayout, big: ModeLayout) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(d) for d in small.dims], indexing="ij")
    return np.ravel_multi_index(tuple(g.ravel() for g in grids), big.dims)


def lift(state: State, big: ModeLayout) -> State:
    """Zero-pad a state into a layout with larger (or equal) per-mode dims."""
    if big.n_modes != state.layout.n_modes or any(b < s for b, s in zip(big.dims, state.layout.dims)):
        raise InvalidArgumentError(f"cannot lift {state.layout.dims} into {big.dims}")
    idx = _retained_index(state.layout, big)
    if isinstance(state, PureStateVector):
        amps = np.zeros(big.total, dtype=complex)
        amps[idx] = state.amplitudes
        return PureStateVector(big, amps)
    mat = np.zeros((big.total, big.total), dtype=complex)
    mat[np.ix_(idx, idx)] = state.matrix
    return DensityMatrix(big, mat, state.unnormalized)


def restrict(state: State, small: ModeLayout) -> State:
    """Project a state onto the leading block of a smaller layout (no renormalization)."""
    idx = _retained_index(small, state.layout)
    if isinstance(state, PureStateVector):
        return PureStateVector(small, state.amplitudes[idx])
    return DensityMatrix(small, state.matrix[np.ix_(idx, idx)], state.unnormalized)


def fock_populations(state: State, mode: int) -> np.ndarray:
    """Photon-number distribution of one mode."""
    if isinstance(state, PureStateVector):
        probs = np.abs(state.tensor_view()) ** 2
        axes = tuple(k for k in range(state.layout.n_modes) if k != mode)
        return probs.sum(axis=axes) if axes else probs
    return np.real(np.diag(partial_trace(state, (mode,)).matrix))


def required_dim(populations: np.ndarray, budget: float) -> int:
    """Smallest cutoff whose tail population is within ``budget``."""
    tail = np.cumsum(np.asarray(populations)[::-1])[::-1]
    inside = np.nonzero(tail <= budget)[0]
    if inside.size == 0:
        return 2 * len(populations)
    return max(2, int(inside[0]))


def check_leakage(big_state: State, small: ModeLayout, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Raise if the padded state holds more than the leakage budget outside ``small``."""
    total = big_state.norm_squared if isinstance(big_state, PureStateVector) else big_state.trace
    kept = restrict(big_state, small)
    kept_norm = kept.norm_squared if isinstance(kept, PureStateVector) else kept.trace
    leakage = max(0.0, total - kept_norm)
    if leakage > tol.truncation_leakage:
        needed = 0
        for mode in range(big_state.layout.n_modes):
            pops = fock_populations(big_state, mode)
            if pops[-1] > tol.truncation_leakage * 1e-3:
                needed = max(needed, 2 * big_state.layout.dims[mode])
            else:
                needed = max(needed, required_dim(pops, tol.truncation_leakage / big_state.layout.n_modes))
        raise TruncationOverflowError(leakage, max(needed, max(small.dims) + 1))
    return leakage


def apply_operator_padded(state: State, op_builder, tol: Tolerances = DEFAULT_TOLERANCES,
                          padding=None) -> Tuple[State, float]:
    """Apply ``op_builder(big_layout)`` in a padded space and truncate back.

    Returns the truncated state and the population lost to truncation.
    """
    small = state.layout
    big = pad_layout(small, padding)
    op = op_builder(big)
    lifted = lift(state, big)
    if isinstance(lifted, PureStateVector):
        moved = PureStateVector(big, op @ lifted.amplitudes)
    else:
        moved = DensityMatrix(big, op @ lifted.matrix @ op.conj().T, lifted.unnormalized)
    leakage = check_leakage(moved, small, tol)
    if leakage > 0.0:
        logger.debug("truncation leakage %.3e on layout %s", leakage, small.dims)
    return restrict(moved, small), leakage


def apply_gaussian_unitary(state: State, u: GaussianUnitarySpec,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> State:
    state.layout.check_modes(u.modes)
    out, _ = apply_operator_padded(state, lambda big: gaussian_unitary_matrix(u, big), tol)
    return out


def apply_gaussian_circuit(state: State, specs: Sequence[GaussianUnitarySpec],
                           tol: Tolerances = DEFAULT_TOLERANCES) -> State:
    for spec in specs:
        state = apply_gaussian_unitary(state, spec, tol)
    return state


# --- composition and reduction -------------------------------------------

def tensor(a: State, b: State) -> State:
    layout = a.layout.concat(b.layout)
    if isinstance(a, PureStateVector) and isinstance(b, PureStateVector):
        return PureStateVector(layout, np.kron(a.amplitudes, b.amplitudes))
    da, db = a.to_density(), b.to_density()
    return DensityMatrix(layout, np.kron(da.matrix, db.matrix),
                         unnormalized=da.unnormalized or db.unnormalized)


def partial_trace(rho: State, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on the ``keep`` modes, in the order given."""
    keep = rho.layout.check_modes(keep)
    if not keep:
        raise InvalidArgumentError("partial trace needs at least one kept mode")
    dims = rho.layout.dims
    n = len(dims)
    traced = [k for k in range(n) if k not in keep]
    if isinstance(rho, PureStateVector):
        psi = rho.tensor_view()
        perm = list(keep) + traced
        psi = np.transpose(psi, perm).reshape(int(np.prod([dims[k] for k in keep])), -1)
        return DensityMatrix(rho.layout.subset(keep), psi @ psi.conj().T)
    tens = rho.matrix.reshape(dims + dims)
    row = list(keep) + traced
    col = [k + n for k in keep] + [k + n for k in traced]
    tens = np.transpose(tens, row + col)
    dk = int(np.prod([dims[k] for k in keep]))
    dt = int(np.prod([dims[k] for k in traced])) if traced else 1
    tens = tens.reshape(dk, dt, dk, dt)
    reduced = np.einsum("ajbj->ab", tens)
    return DensityMatrix(rho.layout.subset(keep), reduced, rho.unnormalized)


def condition(rho: State, effect: PovmEffect, modes: Sequence[int],
              tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[DensityMatrix, float]:
    """Measure ``modes`` with ``effect``; return the unnormalized conditional state and p."""
    rho = rho.to_density()
    modes = rho.layout.check_modes(modes)
    if effect.layout != rho.layout.subset(modes):
        raise InvalidArgumentError(f"effect layout {effect.layout.dims} does not match measured modes")
    remaining = tuple(k for k in range(rho.layout.n_modes) if k not in modes)
    if not remaining:
        raise InvalidArgumentError("conditioning must leave at least one unmeasured mode")
    dims = rho.layout.dims
    # reorder so the measured modes come last, then apply 1 (x) Pi
    order = list(remaining) + list(modes)
    n = len(dims)
    tens = rho.matrix.reshape(dims + dims)
    tens = np.transpose(tens, order + [k + n for k in order])
    dk = int(np.prod([dims[k] for k in remaining]))
    dm = effect.layout.total
    block = tens.reshape(dk, dm, dk, dm)
    out = np.einsum("aibj,ji->ab", block, effect.matrix)
    out = 0.5 * (out + out.conj().T)
    p = fsum_real(np.real(np.diag(out)))
    if p < tol.probability_floor:
        raise ZeroProbabilityError(p, tol.probability_floor)
    return DensityMatrix(rho.layout.subset(remaining), out, unnormalized=True), p


def identity_effect(layout: ModeLayout, label="identity") -> PovmEffect:
    return PovmEffect(layout, np.eye(layout.total, dtype=complex), label)


def projector_effect(layout: ModeLayout, index: int, label=None) -> PovmEffect:
    mat = np.zeros((layout.total, layout.total), dtype=complex)
    mat[index, index] = 1.0
    return PovmEffect(layout, mat, label or f"|{index}><{index}|")


# --- small utilities -----------------------------------------------------

def basis_state(layout: ModeLayout, occupations: Sequence[int]) -> PureStateVector:
    if len(occupations) != layout.n_modes:
        raise InvalidArgumentError("one occupation number per mode is required")
    for n, d in zip(occupations, layout.dims):
        if not 0 <= n < d:
            raise TruncationOverflowError(1.0, n + 1, f"Fock level {n} does not fit dim {d}")
    amps = np.zeros(layout.total, dtype=complex)
    amps[np.ravel_multi_index(tuple(occupations), layout.dims)] = 1.0
    return PureStateVector(layout, amps)


def vacuum(layout: ModeLayout) -> PureStateVector:
    return basis_state(layout, [0] * layout.n_modes)


def expectation(state: State, op: np.ndarray) -> complex:
    if isinstance(state, PureStateVector):
        return complex(np.vdot(state.amplitudes, op @ state.amplitudes))
    return complex(np.trace(state.matrix @ op))


def mean_photon_number(state: State) -> float:
    return float(sum(np.real(expectation(state, a.conj().T @ a)) for a in mode_ladders(state.layout)))


def fidelity_pure(a: PureStateVector, b: State) -> float:
    """Fidelity of a pure state with an arbitrary state of the same layout."""
    if isinstance(b, PureStateVector):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    return float(np.real(np.vdot(a.amplitudes, b.matrix @ a.amplitudes)))


def mixture(states: Sequence[State], weights: Sequence[float]) -> DensityMatrix:
    if len(states) != len(weights) or not states:
        raise InvalidArgumentError("mixture needs matching non-empty states and weights")
    layout = states[0].layout
    mat = sum(w * s.to_density().matrix for s, w in zip(states, weights))
    return DensityMatrix(layout, mat)
