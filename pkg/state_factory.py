"""Constructors for the state families analysed by the toolkit."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from config import DEFAULT_TOLERANCES, Tolerances, default_dim
from errors import InvalidArgumentError, StateSpecParseError, TruncationOverflowError, UndefinedStateError
from fock_core import (DensityMatrix, GaussianUnitarySpec, ModeLayout, PureStateVector,
                       apply_gaussian_unitary, apply_operator_padded, basis_state, check_leakage,
                       fidelity_pure, fock_populations, ladder, quadratures, vacuum)

logger = logging.getLogger(__name__)

FAMILIES = {
    "fock": ("n",),
    "coherent": ("re", "im"),
    "squeezed": ("r", "psi"),
    "cubic": ("gamma", "r"),
    "sub": ("alpha", "r"),
    "add": ("alpha", "r"),
    "cat": ("alpha", "phi", "theta"),
    "lossy1": ("beta",),
    "pair": ("beta",),
    "thermal": ("nbar",),
}
OPTIONAL_DEFAULTS = {"coherent": {"im": 0.0}, "squeezed": {"psi": 0.0}, "sub": {"psi": 0.0},
                     "add": {"psi": 0.0}}
TWO_MODE = {"pair"}
MAX_AUTO_GROWTH = 4


@dataclass(frozen=True)
class StateSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"unknown state family {self.family!r}")
        params = dict(OPTIONAL_DEFAULTS.get(self.family, {}))
        params.update(self.params)
        missing = [k for k in FAMILIES[self.family] if k not in params]
        if missing:
            raise InvalidArgumentError(f"{self.family} state needs parameters {missing}")
        if self.family == "fock":
            n = params["n"]
            if int(n) != n or n < 0:
                raise InvalidArgumentError(f"Fock number must be a non-negative integer, got {n}")
            params["n"] = int(n)
        if "beta" in params and not 0.0 <= params["beta"] <= 1.0:
            raise InvalidArgumentError(f"beta must lie in [0, 1], got {params['beta']}")
        if self.family == "thermal" and params["nbar"] < 0:
            raise InvalidArgumentError("thermal occupation must be non-negative")
        object.__setattr__(self, "params", params)

    @property
    def n_modes(self) -> int:
        return 2 if self.family in TWO_MODE else 1

    def estimated_nbar(self) -> float:
        """Rough mean photon number per mode, used to pick a cutoff."""
        p = self.params
        f = self.family
        if f == "fock":
            return float(p["n"])
        if f == "coherent":
            return p["re"] ** 2 + p["im"] ** 2
        if f == "squeezed":
            return math.sinh(p["r"]) ** 2
        if f == "cubic":
            r, g = p["r"], p["gamma"]
            x2 = math.exp(2 * r) / 2
            p2 = math.exp(-2 * r) / 2 + 6.75 * g * g * math.exp(4 * r)
            return max(0.0, (x2 + p2 - 1.0) / 2)
        if f in ("sub", "add"):
            return abs(complex(p["alpha"])) ** 2 + 3 * math.sinh(p["r"]) ** 2 + 1.0
        if f == "cat":
            return abs(complex(p["alpha"])) ** 2
        if f == "thermal":
            return float(p["nbar"])
        return 1.0

    def label(self) -> str:
        return f"{self.family}:" + ",".join(f"{self.params[k]}" for k in FAMILIES[self.family])


def parse_state(text: str) -> StateSpec:
    """Parse the ``family:p1,p2`` state grammar."""
    if not isinstance(text, str) or ":" not in text:
        raise StateSpecParseError(str(text), "missing ':' separator")
    family, _, body = text.strip().partition(":")
    family = family.strip().lower()
    if family not in FAMILIES:
        raise StateSpecParseError(text, f"unknown family {family!r}")
    names = list(FAMILIES[family])
    if family == "squeezed":
        names = ["r", "psi"]
    if family in ("sub", "add"):
        names = ["alpha", "r", "psi"]
    raw = [v.strip() for v in body.split(",") if v.strip()]
    required = [k for k in names if k not in OPTIONAL_DEFAULTS.get(family, {})]
    if not required and not raw:
        raise StateSpecParseError(text, "no parameters given")
    if len(raw) < len(required) or len(raw) > len(names):
        raise StateSpecParseError(text, f"{family} takes {len(required)}..{len(names)} values")
    params = {}
    try:
        for name, value in zip(names, raw):
            params[name] = complex(value) if name == "alpha" else float(value)
            if name == "alpha" and params[name].imag == 0:
                params[name] = params[name].real
    except ValueError as e:
        raise StateSpecParseError(text, str(e)) from None
    try:
        return StateSpec(family, params)
    except InvalidArgumentError as e:
        raise StateSpecParseError(text, str(e)) from None


# --- closed-form helpers --------------------------------------------------

def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    alpha = complex(alpha)
    if alpha == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def cat_normalization(alpha: complex, phi: float, theta: float) -> float:
    return 1.0 + math.sin(2 * phi) * math.cos(theta) * math.exp(-2 * abs(complex(alpha)) ** 2)


def sub_normalization(alpha: complex, r: float) -> float:
    return math.sinh(r) ** 2 + abs(complex(alpha)) ** 2


def add_normalization(alpha: complex, r: float) -> float:
    return 1.0 + math.sinh(r) ** 2 + abs(complex(alpha)) ** 2


def two_level_sub(alpha: complex, r: float, psi: float = 0.0, dim: int = 3) -> PureStateVector:
    """Photon-subtracted state with its Gaussian part stripped."""
    norm = sub_normalization(alpha, r)
    if norm == 0.0:
        raise UndefinedStateError("photon subtraction from the vacuum has zero probability")
    amps = np.zeros(dim, dtype=complex)
    amps[0] = complex(alpha)
    amps[1] = np.exp(1j * psi) * math.sinh(abs(r))
    return PureStateVector(ModeLayout.of(dim), amps / math.sqrt(norm))


def two_level_add(alpha: complex, r: float, dim: int = 3) -> PureStateVector:
    amps = np.zeros(dim, dtype=complex)
    amps[0] = np.conj(complex(alpha))
    amps[1] = math.cosh(abs(r))
    return PureStateVector(ModeLayout.of(dim), amps / math.sqrt(add_normalization(alpha, r)))


def qubit_state(energy: float, dim: int = 3) -> PureStateVector:
    """sqrt(1-E)|0> + sqrt(E)|1>, the energy-optimal two-level state for E <= 1."""
    if not 0.0 <= energy <= 1.0:
        raise InvalidArgumentError(f"qubit energy must lie in [0, 1], got {energy}")
    amps = np.zeros(dim, dtype=complex)
    amps[0], amps[1] = math.sqrt(1 - energy), math.sqrt(energy)
    return PureStateVector(ModeLayout.of(dim), amps)


# --- builders --------------------------------------------------------------

def _padded_coherent(alpha, layout, tol):
    big = 2 * layout.dims[0] + 10
    amps = coherent_amplitudes(alpha, big)
    padded = PureStateVector(ModeLayout.of(big), amps)
    check_leakage(padded, layout, tol)
    return amps[:layout.dims[0]]


def cubic_gate(gamma: float, dim: int) -> np.ndarray:
    x, _ = quadratures(dim)
    return expm(1j * gamma * (x @ x @ x))


def _squeezed_vacuum(r, psi, layout, tol):
    return apply_gaussian_unitary(vacuum(layout), GaussianUnitarySpec.squeeze(r, psi), tol)


def _build_single(spec: StateSpec, layout: ModeLayout, tol: Tolerances):
    p = spec.params
    f = spec.family
    dim = layout.dims[0]
    if f == "fock":
        return basis_state(layout, [p["n"]])
    if f == "coherent":
        return PureStateVector(layout, _padded_coherent(complex(p["re"], p["im"]), layout, tol))
    if f == "squeezed":
        return _squeezed_vacuum(p["r"], p["psi"], layout, tol)
    if f == "cubic":
        squeezed = _squeezed_vacuum(p["r"], 0.0, layout, tol)
        if p["gamma"] == 0:
            return squeezed
        # the truncated x^3 is only faithful well below the padded cutoff
        state, _ = apply_operator_padded(squeezed, lambda big: cubic_gate(p["gamma"], big.dims[0]),
                                         tol, padding=2 * dim)
        return state
    if f in ("sub", "add"):
        alpha = complex(p["alpha"])
        if f == "sub" and sub_normalization(alpha, p["r"]) == 0.0:
            raise UndefinedStateError("photon subtraction from the vacuum has zero probability")
        gauss = _squeezed_vacuum(p["r"], p["psi"], layout, tol)
        gauss = apply_gaussian_unitary(gauss, GaussianUnitarySpec.displacement(alpha), tol)
        if f == "sub":
            raw = PureStateVector(layout, ladder(dim) @ gauss.amplitudes)
        else:
            raw, _ = apply_operator_padded(gauss, lambda big: ladder(big.dims[0]).conj().T, tol)
        if raw.norm_squared < tol.probability_floor:
            raise UndefinedStateError(f"{f} state has vanishing norm")
        return raw.normalized()
    if f == "cat":
        alpha, phi, theta = complex(p["alpha"]), p["phi"], p["theta"]
        plus = _padded_coherent(alpha, layout, tol)
        minus = _padded_coherent(-alpha, layout, tol)
        raw = math.cos(phi) * plus + math.sin(phi) * np.exp(1j * theta) * minus
        k = cat_normalization(alpha, phi, theta)
        if k <= tol.probability_floor:
            raise UndefinedStateError("cat superposition cancels exactly")
        return PureStateVector(layout, raw / math.sqrt(k))
    if f == "lossy1":
        beta = p["beta"]
        mat = np.zeros((dim, dim), dtype=complex)
        mat[0, 0], mat[1, 1] = 1 - beta, beta
        return DensityMatrix(layout, mat)
    if f == "thermal":
        return thermal(p["nbar"], layout, tol)
    raise InvalidArgumentError(f"family {f} is not single-mode")


def thermal(nbar: float, layout: ModeLayout, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    dim = layout.dims[0]
    if nbar == 0:
        probs = np.zeros(dim)
        probs[0] = 1.0
    else:
        q = nbar / (1.0 + nbar)
        probs = (1 - q) * q ** np.arange(dim)
        leakage = q ** dim
        if leakage > tol.truncation_leakage:
            needed = int(math.ceil(math.log(tol.truncation_leakage) / math.log(q)))
            raise TruncationOverflowError(leakage, needed)
    return DensityMatrix(layout, np.diag(probs).astype(complex))


def pair_state(beta: float, layout: ModeLayout) -> PureStateVector:
    amps = np.zeros(layout.total, dtype=complex)
    amps[np.ravel_multi_index((0, 0), layout.dims)] = math.sqrt(1 - beta)
    amps[np.ravel_multi_index((1, 1), layout.dims)] = math.sqrt(beta)
    return PureStateVector(layout, amps)


def default_layout(spec: StateSpec) -> ModeLayout:
    dim = default_dim(spec.estimated_nbar())
    return ModeLayout(tuple([dim] * spec.n_modes))


def _check_top_level(state, tol: Tolerances):
    for mode, d in enumerate(state.layout.dims):
        top = fock_populations(state, mode)[-1]
        if top > tol.truncation_leakage:
            raise TruncationOverflowError(top, d + max(4, d // 4),
                                          f"top Fock level of mode {mode} holds {top:.2e}")


def build(spec: StateSpec, layout: Optional[ModeLayout] = None,
          tol: Tolerances = DEFAULT_TOLERANCES):
    """Construct ``spec``; without a layout the cutoff grows until the leakage budget holds.

    Automatic cutoffs also keep every mode's top Fock level below the budget, so
    auto-built states are accepted by ``gaussian_calculus.moments``.
    """
    auto = layout is None
    if auto:
        layout = default_layout(spec)
    if layout.n_modes != spec.n_modes:
        raise InvalidArgumentError(f"{spec.family} needs {spec.n_modes} mode(s), layout has {layout.n_modes}")
    for attempt in range(MAX_AUTO_GROWTH + 1):
        try:
            if spec.family == "pair":
                state = pair_state(spec.params["beta"], layout)
            else:
                state = _build_single(spec, layout, tol)
            if auto:
                _check_top_level(state, tol)
            return state
        except TruncationOverflowError as e:
            if not auto or attempt == MAX_AUTO_GROWTH:
                raise
            grown = max(e.required_dim, max(layout.dims) + 1)
            logger.info("raising cutoff for %s from %s to %d", spec.label(), layout.dims, grown)
            layout = ModeLayout(tuple([grown] * layout.n_modes))


def build_text(text: str, dim: Optional[int] = None, tol: Tolerances = DEFAULT_TOLERANCES):
    spec = parse_state(text)
    layout = ModeLayout(tuple([dim] * spec.n_modes)) if dim else None
    return build(spec, layout, tol)


def cubic_state(gamma: float, r: float, dim: Optional[int] = None,
                tol: Tolerances = DEFAULT_TOLERANCES) -> PureStateVector:
    spec = StateSpec("cubic", {"gamma": gamma, "r": r})
    return build(spec, ModeLayout.of(dim) if dim else None, tol)


def verify_squeezing_cubic_identity(gamma: float, r: float, r_prime: float, dim: int = 60,
                                    tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Overlap of S(-r')|gamma, r+r'> with |e^{3r'} gamma, r>."""
    target = cubic_state(math.exp(3 * r_prime) * gamma, r, dim, tol)
    source = cubic_state(gamma, r + r_prime, dim, tol)
    moved = apply_gaussian_unitary(source, GaussianUnitarySpec.squeeze(-r_prime), tol)
    return fidelity_pure(target, moved)


def energy_optimal_squeezing(u: float) -> float:
    """Squeezing that minimises the mean energy of a cubic state with fixed e^{3r} gamma."""
    return 0.25 * math.log1p(13.5 * u * u)


def cubic_from_u(u: float, dim: Optional[int] = None, tol: Tolerances = DEFAULT_TOLERANCES):
    r = energy_optimal_squeezing(u)
    return cubic_state(u * math.exp(-3 * r), r, dim, tol)


def random_gaussian_circuit(rng: np.random.Generator, n_modes: int = 1, depth: int = 3,
                            max_r: float = 0.3, max_alpha: float = 0.5):
    """A short random sequence of Gaussian unitaries with modest energy."""
    specs = []
    for _ in range(depth):
        mode = int(rng.integers(n_modes))
        kind = rng.choice(["displacement", "squeeze", "phase"] + (["beamsplitter"] if n_modes > 1 else []))
        if kind == "displacement":
            specs.append(GaussianUnitarySpec.displacement(
                complex(*rng.uniform(-max_alpha, max_alpha, size=2)), mode))
        elif kind == "squeeze":
            specs.append(GaussianUnitarySpec.squeeze(rng.uniform(-max_r, max_r),
                                                     rng.uniform(0, 2 * math.pi), mode))
        elif kind == "phase":
            specs.append(GaussianUnitarySpec.phase(rng.uniform(0, 2 * math.pi), mode))
        else:
            specs.append(GaussianUnitarySpec.beamsplitter(rng.uniform(0, 1), rng.uniform(0, 2 * math.pi)))
    return specs
