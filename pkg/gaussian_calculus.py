"""Moments, symplectic spectra and the relative entropy of non-Gaussianity."""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import xlogy

from config import DEFAULT_TOLERANCES, Tolerances
from errors import (InvalidArgumentError, InvalidStateError, NonGaussianityError, TruncationOverflowError,
                    UndefinedStateError)
from fock_core import (GaussianUnitarySpec, ModeLayout, PureStateVector, State, expectation, fock_populations,
                       lift, mean_photon_number, quadratures, embed)
import phase_space
import state_factory

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


def omega(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class CovarianceData:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).ravel()
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size) or mean.size % 2:
            raise InvalidArgumentError(f"covariance shape {cov.shape} does not match {mean.size} moments")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(cov))):
            raise InvalidStateError("covariance matrix is not symmetric")
        mean.setflags(write=False)
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def is_physical(self, tol: float = 1e-8) -> bool:
        return bool(np.linalg.eigvalsh(self.cov + 1j * omega(self.n_modes)).min() >= -tol)


@dataclass(frozen=True)
class SymplecticSpectrum:
    eigenvalues: np.ndarray

    def __iter__(self):
        return iter(self.eigenvalues)


def moments(state: State, check_tail: bool = True, tol: Tolerances = DEFAULT_TOLERANCES) -> CovarianceData:
    """First moments and sigma = Tr[rho {dr, dr^T}] from ladder expectations."""
    layout = state.layout
    if check_tail:
        for mode, d in enumerate(layout.dims):
            top = fock_populations(state, mode)[-1]
            if top > tol.truncation_leakage:
                raise TruncationOverflowError(top, 2 * d, f"mode {mode} has population {top:.2e} in its top Fock level;"
                                                          f" moments need dim >= {2 * d}")
    # one extra level so x^2 and p^2 are exact on the retained block
    big = ModeLayout(tuple(d + 1 for d in layout.dims))
    lifted = lift(state, big)
    ops = []
    for mode, d in enumerate(big.dims):
        x, p = quadratures(d)
        ops += [embed(x, mode, big), embed(p, mode, big)]
    norm = lifted.norm_squared if isinstance(lifted, PureStateVector) else lifted.trace
    mean = np.array([np.real(expectation(lifted, op)) for op in ops]) / norm
    n = len(ops)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            value = np.real(expectation(lifted, ops[i] @ ops[j] + ops[j] @ ops[i])) / norm
            cov[i, j] = cov[j, i] = value - 2.0 * mean[i] * mean[j]
    return CovarianceData(mean, cov)


def symplectic_eigenvalues(cov, tol: Tolerances = DEFAULT_TOLERANCES) -> SymplecticSpectrum:
    sigma = cov.cov if isinstance(cov, CovarianceData) else np.asarray(cov, dtype=float)
    n_modes = sigma.shape[0] // 2
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * omega(n_modes) @ sigma)))
    nu = moduli[::2]
    if nu.min() < 1.0 - tol.symplectic:
        raise InvalidStateError(f"unphysical covariance: symplectic eigenvalue {nu.min():.10f} < 1")
    return SymplecticSpectrum(nu)


def entropy_h(x, tol: Tolerances = DEFAULT_TOLERANCES):
    """Entropy in bits of a one-mode Gaussian state with symplectic eigenvalue x."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 1.0 - tol.symplectic):
        raise InvalidArgumentError(f"entropy_h needs x >= 1, got {arr.min()}")
    arr = np.maximum(arr, 1.0)
    plus, minus = 0.5 * (arr + 1.0), 0.5 * (arr - 1.0)
    value = (xlogy(plus, plus) - xlogy(minus, minus)) / LN2
    return float(value) if np.ndim(value) == 0 else value


def gaussian_entropy(cov, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return float(sum(entropy_h(nu, tol) for nu in symplectic_eigenvalues(cov, tol)))


def delta_pure(psi: State, check_tail: bool = True, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Relative entropy of non-Gaussianity of a pure state, in bits."""
    if not isinstance(psi, PureStateVector):
        rho = psi.to_density()
        if abs(rho.purity() - 1.0) > 1e-8:
            raise InvalidArgumentError("delta_pure is defined for pure states only")
    return gaussian_entropy(moments(psi, check_tail, tol), tol)


def single_mode_delta_batch(vectors: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """delta of many single-mode pure vectors at once (rows, unnormalized allowed).

    Rows are rescaled by their largest amplitude first so that tiny conditional
    branches keep full precision. A covariance determinant below one is clipped
    only within ``tol.symplectic``; anything larger raises InvalidStateError.
    """
    vectors = np.asarray(vectors, dtype=complex)
    scale = np.max(np.abs(vectors), axis=1, keepdims=True)
    if np.any(scale == 0.0):
        raise InvalidArgumentError("a zero vector has no moments")
    dim = vectors.shape[1]
    padded = np.zeros((vectors.shape[0], dim + 1), dtype=complex)
    padded[:, :dim] = vectors / scale
    norms = np.einsum("ij,ij->i", padded.conj(), padded).real
    x, p = quadratures(dim + 1)

    def expect(op):
        return np.einsum("ij,jk,ik->i", padded.conj(), op, padded).real / norms

    mx, mp = expect(x), expect(p)
    sxx = 2 * expect(x @ x) - 2 * mx * mx
    spp = 2 * expect(p @ p) - 2 * mp * mp
    sxp = expect(x @ p + p @ x) - 2 * mx * mp
    nu = np.sqrt(np.maximum(sxx * spp - sxp * sxp, 0.0))
    if np.any(nu < 1.0 - tol.symplectic):
        worst = int(np.argmin(nu))
        raise InvalidStateError(f"unphysical covariance in row {worst}: symplectic eigenvalue {nu[worst]:.10f} < 1")
    return entropy_h(np.maximum(nu, 1.0), tol)


# --- closed forms -----------------------------------------------------------

def delta_cubic_closed(u: float) -> float:
    return entropy_h(math.sqrt(1.0 + 9.0 * u * u))


def _photon_closed(alpha, r, hyperbolic) -> float:
    a2 = abs(complex(alpha)) ** 2
    return entropy_h(math.sqrt(8.0 / (a2 * hyperbolic + 1.0) ** 3 + 1.0))


def delta_sub_closed(alpha, r: float) -> float:
    a2 = abs(complex(alpha)) ** 2
    if r == 0.0:
        if a2 == 0.0:
            raise UndefinedStateError("photon subtraction from the vacuum has zero probability")
        return 0.0
    return _photon_closed(alpha, r, 1.0 / math.sinh(r) ** 2)


def delta_add_closed(alpha, r: float) -> float:
    return _photon_closed(alpha, r, 1.0 / math.cosh(r) ** 2)


def delta_closed_form(spec) -> Optional[float]:
    """Closed-form delta for families that have one, otherwise None."""
    p = spec.params
    if spec.family == "cubic":
        return delta_cubic_closed(math.exp(3 * p["r"]) * p["gamma"])
    if spec.family == "sub":
        return delta_sub_closed(p["alpha"], p["r"])
    if spec.family == "add":
        return delta_add_closed(p["alpha"], p["r"])
    if spec.family == "fock":
        return entropy_h(2 * p["n"] + 1.0)
    if spec.family in ("coherent", "squeezed"):
        return 0.0
    return None


# --- symplectic action of Gaussian unitaries ------------------------------

def symplectic_matrix(spec: GaussianUnitarySpec, n_modes: int):
    """(S, d) with r' = S r + d for the Heisenberg action of ``spec``."""
    S = np.eye(2 * n_modes)
    d = np.zeros(2 * n_modes)
    p = spec.params
    if spec.kind == "displacement":
        (m,) = spec.modes
        alpha = complex(p.get("alpha", 0.0))
        d[2 * m], d[2 * m + 1] = math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag
    elif spec.kind == "squeeze":
        (m,) = spec.modes
        r, psi = p.get("r", 0.0), p.get("psi", 0.0)
        c, s = math.cosh(r), math.sinh(r)
        S[2 * m:2 * m + 2, 2 * m:2 * m + 2] = [[c + s * math.cos(psi), s * math.sin(psi)],
                                                [s * math.sin(psi), c - s * math.cos(psi)]]
    elif spec.kind == "phase":
        (m,) = spec.modes
        phi = p.get("phi", 0.0)
        S[2 * m:2 * m + 2, 2 * m:2 * m + 2] = [[math.cos(phi), math.sin(phi)], [-math.sin(phi), math.cos(phi)]]
    else:
        i, j = spec.modes
        T, theta = p.get("T", 0.5), p.get("theta", math.pi)
        c, s = math.sqrt(T), math.sqrt(1.0 - T)
        ct, st = math.cos(theta), math.sin(theta)
        block = {
            (i, i): [[c, 0.0], [0.0, c]],
            (i, j): [[s * ct, -s * st], [s * st, s * ct]],
            (j, i): [[-s * ct, -s * st], [s * st, -s * ct]],
            (j, j): [[c, 0.0], [0.0, c]],
        }
        for (a, b), value in block.items():
            S[2 * a:2 * a + 2, 2 * b:2 * b + 2] = value
    return S, d


def transform_covariance(data: CovarianceData, spec: GaussianUnitarySpec) -> CovarianceData:
    S, d = symplectic_matrix(spec, data.n_modes)
    return CovarianceData(S @ data.mean + d, S @ data.cov @ S.T)


# --- energy frontier --------------------------------------------------------

@dataclass
class FrontierPoint:
    nbar: float
    family: str
    wln: float
    params: dict = field(default_factory=dict)
    converged: bool = True
    message: str = ""

    def row(self) -> dict:
        params = ";".join(f"{k}={v:.6g}" for k, v in self.params.items())
        return {"nbar": self.nbar, "family": self.family, "wln": self.wln, "params": params}


FRONTIER_FAMILIES = ("cubic", "addsub", "cat", "fock")


def odd_cat_alpha(nbar: float) -> float:
    """|alpha| of the odd cat with mean photon number nbar >= 1."""
    if nbar < 1.0:
        raise InvalidArgumentError("odd cats have mean photon number >= 1")
    if nbar - 1.0 < 1e-12:
        return 0.0
    return brentq(lambda a: a * a / math.tanh(a * a) - nbar, 1e-6, math.sqrt(nbar) + 1.0, xtol=1e-12)


def cat_mean_photons(alpha: float, theta: float) -> float:
    e = math.exp(-2 * alpha * alpha)
    return alpha * alpha * (1 - math.cos(theta) * e) / (1 + math.cos(theta) * e)


def _cat_point(nbar: float, tol: Tolerances) -> FrontierPoint:
    if nbar >= 1.0:
        alpha = odd_cat_alpha(nbar)
        if alpha < 1e-6:
            return FrontierPoint(nbar, "cat", phase_space.wln(state_factory.build(state_factory.StateSpec("fock", {"n": 1})), tol),
                                 {"alpha": 0.0, "phi": math.pi / 4, "theta": math.pi})
        state = state_factory.build(state_factory.StateSpec("cat", {"alpha": alpha, "phi": math.pi / 4, "theta": math.pi}))
        return FrontierPoint(nbar, "cat", phase_space.wln(state, tol),
                             {"alpha": alpha, "phi": math.pi / 4, "theta": math.pi})

    def wln_at(theta):
        alpha = brentq(lambda a: cat_mean_photons(a, theta) - nbar, 1e-8, math.sqrt(nbar) + 4.0)
        spec = state_factory.StateSpec("cat", {"alpha": alpha, "phi": math.pi / 4, "theta": theta})
        return phase_space.wln(state_factory.build(spec), tol), alpha

    best = minimize_scalar(lambda th: -wln_at(th)[0], bounds=(0.05, math.pi), method="bounded",
                           options={"xatol": 1e-4})
    value, alpha = wln_at(best.x)
    return FrontierPoint(nbar, "cat", value, {"alpha": alpha, "phi": math.pi / 4, "theta": float(best.x)},
                         bool(best.success))


def _addsub_point(nbar: float, tol: Tolerances) -> FrontierPoint:
    if nbar >= 1.0:
        return FrontierPoint(nbar, "addsub", phase_space.wln(state_factory.build(state_factory.StateSpec("fock", {"n": 1})), tol),
                             {"energy": 1.0})
    return FrontierPoint(nbar, "addsub", phase_space.wln(state_factory.qubit_state(nbar, dim=3), tol),
                         {"energy": nbar})


def cubic_mean_photons(gamma: float, r: float, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return mean_photon_number(state_factory.cubic_state(gamma, r, tol=tol))


def _cubic_point(nbar: float, tol: Tolerances) -> FrontierPoint:
    r_max = math.asinh(math.sqrt(nbar))

    def gamma_for(r):
        excess = nbar - math.sinh(r) ** 2
        if excess <= 0:
            return 0.0
        guess = math.sqrt(8 * excess / 27) * math.exp(-2 * r)
        hi = 2 * guess + 1e-3
        while cubic_mean_photons(hi, r, tol) < nbar:
            hi *= 2
        return brentq(lambda g: cubic_mean_photons(g, r, tol) - nbar, 0.0, hi, xtol=1e-6)

    result = minimize_scalar(lambda r: -math.exp(3 * r) * gamma_for(r), bounds=(-0.5, 0.999 * r_max),
                             method="bounded", options={"xatol": 1e-3})
    r = float(result.x)
    gamma = gamma_for(r)
    state = state_factory.cubic_state(gamma, r, tol=tol)
    return FrontierPoint(nbar, "cubic", phase_space.wln(state, tol),
                         {"gamma": gamma, "r": r, "u": math.exp(3 * r) * gamma}, bool(result.success))


def _fock_point(nbar: float, tol: Tolerances) -> Optional[FrontierPoint]:
    n = int(round(nbar))
    if abs(nbar - n) > 1e-9:
        return None
    state = state_factory.build(state_factory.StateSpec("fock", {"n": n}))
    return FrontierPoint(float(n), "fock", phase_space.wln(state, tol), {"n": n})


_FRONTIER_BUILDERS = {"cubic": _cubic_point, "addsub": _addsub_point, "cat": _cat_point, "fock": _fock_point}


def energy_frontier(family: str, nbar_grid: Iterable[float],
                    tol: Tolerances = DEFAULT_TOLERANCES) -> List[FrontierPoint]:
    """Maximal WLN of ``family`` at each mean photon number."""
    if family not in _FRONTIER_BUILDERS:
        raise InvalidArgumentError(f"unknown frontier family {family!r}; choose from {FRONTIER_FAMILIES}")
    points = []
    for nbar in nbar_grid:
        if nbar <= 0:
            raise InvalidArgumentError("frontier energies must be positive")
        try:
            point = _FRONTIER_BUILDERS[family](float(nbar), tol)
        except (NonGaussianityError, ValueError, RuntimeError) as e:
            logger.warning("frontier %s at nbar=%.4g failed: %s", family, nbar, e)
            point = FrontierPoint(float(nbar), family, float("nan"), converged=False, message=str(e))
        if point is not None:
            points.append(point)
    return points


def fock_envelope(nbar_values: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES) -> List[FrontierPoint]:
    return energy_frontier("fock", nbar_values, tol)
