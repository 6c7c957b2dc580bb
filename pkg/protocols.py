"""Negativity concentration with coarse-grained homodyne and heterodyne conditioning."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.special import gammainc, gammaln
from tqdm import tqdm

from config import DEFAULT_TOLERANCES, Tolerances
from errors import InvalidArgumentError, UndefinedStateError
from fock_core import (DensityMatrix, GaussianUnitarySpec, ModeLayout, PovmEffect, State, apply_gaussian_unitary,
                       condition, lift, restrict, tensor)
import phase_space
import state_factory

logger = logging.getLogger(__name__)

SINGLE_PHOTON_ZERO = 1.0 / math.sqrt(2.0)
DEFAULT_TRANSMISSIVITIES = (0.3, 0.4, 0.5, 0.6, 0.7)


@dataclass(frozen=True)
class DetectorWindow:
    """Acceptance region of a coarse-grained Gaussian measurement.

    homodyne: x in [center - c, center + c] (plus the mirror image when ``mirrored``)
    heterodyne_ring: |alpha| <= c, phase averaged
    heterodyne_sector: alpha_lo <= |alpha| < alpha_hi, theta_lo <= arg(alpha) < theta_hi
    """

    kind: str
    c: float = 0.0
    center: float = 0.0
    mirrored: bool = False
    alpha_lo: float = 0.0
    alpha_hi: float = math.inf
    theta_lo: float = -math.pi
    theta_hi: float = math.pi

    def __post_init__(self):
        if self.kind not in ("homodyne", "heterodyne_ring", "heterodyne_sector"):
            raise InvalidArgumentError(f"unknown detector window {self.kind!r}")
        if self.kind in ("homodyne", "heterodyne_ring") and not self.c > 0:
            raise InvalidArgumentError("window width must be positive")
        if self.kind == "heterodyne_sector":
            if self.alpha_lo < 0 or not self.alpha_hi > self.alpha_lo:
                raise InvalidArgumentError("sector amplitude bounds must satisfy 0 <= lo < hi")
            if not self.theta_lo < self.theta_hi:
                raise InvalidArgumentError("sector angles must satisfy theta_lo < theta_hi")

    @classmethod
    def homodyne(cls, c, center=0.0, mirrored=False):
        return cls("homodyne", c=float(c), center=float(center), mirrored=mirrored)

    @classmethod
    def heterodyne_ring(cls, c):
        return cls("heterodyne_ring", c=float(c))

    @classmethod
    def heterodyne_sector(cls, alpha_lo, alpha_hi=math.inf, theta_lo=-math.pi / 6, theta_hi=math.pi / 6):
        return cls("heterodyne_sector", alpha_lo=float(alpha_lo), alpha_hi=float(alpha_hi),
                   theta_lo=float(theta_lo), theta_hi=float(theta_hi))

    def describe(self) -> str:
        if self.kind == "homodyne":
            return f"hom[c={self.c:g},x0={self.center:g}{',mirrored' if self.mirrored else ''}]"
        if self.kind == "heterodyne_ring":
            return f"het[c={self.c:g}]"
        return f"sector[{self.alpha_lo:g},{self.alpha_hi:g})x[{self.theta_lo:.4f},{self.theta_hi:.4f})"


# --- effects ----------------------------------------------------------------

def heterodyne_ring_effect(c: float, dim: int) -> PovmEffect:
    if not c > 0:
        raise InvalidArgumentError("heterodyne ring radius must be positive")
    diag = gammainc(np.arange(1, dim + 1), c * c) if math.isfinite(c) else np.ones(dim)
    return PovmEffect(ModeLayout.of(dim), np.diag(diag).astype(complex), f"het[c={c:g}]")


def heterodyne_sector_effect(alpha_lo: float, alpha_hi: float, theta_lo: float, theta_hi: float,
                             dim: int) -> PovmEffect:
    """<n| int_sector d^2alpha/pi |alpha><alpha| |m>."""
    n = np.arange(dim)
    N, M = np.meshgrid(n, n, indexing="ij")
    s = 0.5 * (N + M) + 1.0
    upper = gammainc(s, alpha_hi ** 2) if math.isfinite(alpha_hi) else np.ones_like(s)
    radial = 0.5 * np.exp(gammaln(s) - 0.5 * (gammaln(N + 1) + gammaln(M + 1))) * (upper - gammainc(s, alpha_lo ** 2))
    diff = N - M
    with np.errstate(invalid="ignore", divide="ignore"):
        angular = np.where(diff == 0, theta_hi - theta_lo,
                           (np.exp(1j * diff * theta_hi) - np.exp(1j * diff * theta_lo)) / (1j * np.where(diff == 0, 1, diff)))
    matrix = radial * angular / math.pi
    return PovmEffect(ModeLayout.of(dim), 0.5 * (matrix + matrix.conj().T),
                      f"sector[{alpha_lo:g},{alpha_hi:g})")


def hermite_functions(dim: int, x: np.ndarray) -> np.ndarray:
    """psi_n(x) for n < dim in the x = (a + a^dagger)/sqrt(2) convention, shape (dim, len(x))."""
    x = np.asarray(x, dtype=float)
    psi = np.empty((dim,) + x.shape)
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if dim > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for k in range(1, dim - 1):
        psi[k + 1] = math.sqrt(2.0 / (k + 1)) * x * psi[k] - math.sqrt(k / (k + 1)) * psi[k - 1]
    return psi


def _interval_overlaps(lo: float, hi: float, dim: int, rtol: float = 1e-13) -> np.ndarray:
    reach = math.sqrt(2.0 * dim + 1.0) + 12.0
    lo, hi = max(lo, -reach), min(hi, reach)
    if hi <= lo:
        return np.zeros((dim, dim))
    nodes = max(32, 2 * dim)
    previous = None
    for _ in range(8):
        t, w = phase_space.gauss_legendre(nodes)
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        psi = hermite_functions(dim, mid + half * t)
        current = (psi * (half * w)) @ psi.T
        if previous is not None and np.max(np.abs(current - previous)) <= rtol:
            return current
        previous = current
        nodes *= 2
    return current


def homodyne_interval_effect(x_lo: float, x_hi: float, dim: int) -> PovmEffect:
    if not x_lo < x_hi:
        raise InvalidArgumentError("homodyne window needs x_lo < x_hi")
    return PovmEffect(ModeLayout.of(dim), _interval_overlaps(x_lo, x_hi, dim).astype(complex),
                      f"hom[{x_lo:g},{x_hi:g}]")


def window_effect(window: DetectorWindow, dim: int) -> PovmEffect:
    if window.kind == "heterodyne_ring":
        return heterodyne_ring_effect(window.c, dim)
    if window.kind == "heterodyne_sector":
        return heterodyne_sector_effect(window.alpha_lo, window.alpha_hi, window.theta_lo, window.theta_hi, dim)
    lo, hi = window.center - window.c, window.center + window.c
    matrix = _interval_overlaps(lo, hi, dim)
    if window.mirrored and window.center != 0.0:
        mlo, mhi = -hi, -lo
        if mlo < hi and lo < mhi:
            matrix = _interval_overlaps(min(lo, mlo), max(hi, mhi), dim)
        else:
            matrix = matrix + _interval_overlaps(mlo, mhi, dim)
    return PovmEffect(ModeLayout.of(dim), matrix.astype(complex), window.describe())


# --- concentration ----------------------------------------------------------

@dataclass
class ConcentrationResult:
    output: DensityMatrix
    p: float
    wln_in: float
    wln_out: float
    eta: float
    epsilon: float
    T: float = 0.5
    window: str = ""
    k: int = 2
    m: int = 1

    @property
    def wln_in_global(self) -> float:
        return self.k * self.wln_in

    def row(self, c: Optional[float] = None) -> dict:
        return {"T": self.T, "c": c, "p": self.p, "wln_out": self.wln_out, "eta": self.eta, "epsilon": self.epsilon}


def _support_dim(rho: DensityMatrix, cutoff: float = 1e-14) -> int:
    diag = np.real(np.diag(rho.matrix))
    occupied = np.nonzero(diag > cutoff)[0]
    return max(2, int(occupied[-1]) + 1) if occupied.size else 2


def beamsplit_copies(rho: DensityMatrix, T: float, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """U_bs(T) (rho x rho) U_bs(T)^dagger on the number-conserving block."""
    support = _support_dim(rho)
    n_max = support - 1
    single = restrict(rho, ModeLayout.of(support))
    out_dim = 2 * n_max + 1
    lifted = lift(single, ModeLayout.of(out_dim))
    pair = tensor(lifted, lifted)
    return apply_gaussian_unitary(pair, GaussianUnitarySpec.beamsplitter(T), tol)


def concentrate(state: State, T: float, window: DetectorWindow, tol: Tolerances = DEFAULT_TOLERANCES,
                wln_in: Optional[float] = None) -> ConcentrationResult:
    """Two copies in, one conditioned output: p, eta and epsilon."""
    rho = state.to_density()
    if rho.layout.n_modes != 1:
        raise InvalidArgumentError("concentration takes a single-mode input")
    if wln_in is None:
        wln_in = phase_space.wln(rho, tol)
    if wln_in <= 1e-12:
        raise UndefinedStateError("input has zero WLN; efficiency and gain are undefined for Gaussian inputs")
    mixed = beamsplit_copies(rho, T, tol)
    effect = window_effect(window, mixed.layout.dims[1])
    raw, p = condition(mixed, effect, (1,), tol)
    output = raw.normalized()
    wln_out = phase_space.wln(output, tol)
    eta = p * wln_out / (2.0 * wln_in)
    epsilon = (wln_out - wln_in) / wln_in
    logger.debug("T=%.3f %s: p=%.3e wln_out=%.5f", T, window.describe(), p, wln_out)
    return ConcentrationResult(output, p, wln_in, wln_out, eta, epsilon, T, window.describe())


@dataclass
class SweepTask:
    input_text: str
    dim: Optional[int]
    T: float
    window: DetectorWindow
    c: float
    tol: Tolerances = field(default_factory=Tolerances)


def _run_task(task: SweepTask):
    state = state_factory.build_text(task.input_text, task.dim, task.tol)
    try:
        return concentrate(state, task.T, task.window, task.tol).row(task.c)
    except Exception as e:
        logger.warning("sweep point T=%.3f c=%.4g failed: %s", task.T, task.c, e)
        return {"T": task.T, "c": task.c, "p": float("nan"), "wln_out": float("nan"),
                "eta": float("nan"), "epsilon": float("nan"), "error": str(e)}


def make_window(detector: str, c: float, center: float = 0.0, mirrored: bool = False) -> DetectorWindow:
    if detector == "het":
        return DetectorWindow.heterodyne_ring(c)
    if detector == "hom":
        return DetectorWindow.homodyne(c, center, mirrored)
    raise InvalidArgumentError(f"detector must be 'het' or 'hom', got {detector!r}")


def parallel_map(fn: Callable, items: Sequence, workers: int = 1, desc: str = "", progress: bool = False) -> List:
    """``[fn(item) for item in items]``, spread over ``workers`` processes when more than one is asked for.

    ``fn`` must be picklable (a module-level function or a ``functools.partial`` of one).
    Results keep the input order.
    """
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(fn, items), total=len(items), desc=desc, disable=not progress))
    return [fn(item) for item in tqdm(items, desc=desc, disable=not progress)]


def concentration_sweep(input_text: str, detector: str, transmissivities: Sequence[float], cs: Sequence[float],
                        dim: Optional[int] = None, center: float = 0.0, mirrored: bool = False,
                        workers: int = 1, tol: Tolerances = DEFAULT_TOLERANCES, progress: bool = False) -> List[dict]:
    """Rows (T, c, p, wln_out, eta, epsilon) in (T, c) input order."""
    tasks = [SweepTask(input_text, dim, float(T), make_window(detector, c, center, mirrored), float(c), tol)
             for T in transmissivities for c in cs]
    return parallel_map(_run_task, tasks, workers, "concentrate", progress)


def _lossy_rows(beta: float, cs: Sequence[float], T: float, tol: Tolerances) -> List[dict]:
    state = state_factory.build(state_factory.StateSpec("lossy1", {"beta": beta}), ModeLayout.of(3))
    w_in = phase_space.wln(state, tol)
    rows = []
    for c in cs:
        result = concentrate(state, T, DetectorWindow.heterodyne_ring(c), tol, wln_in=w_in)
        rows.append({"beta": beta, **result.row(c)})
    return rows


def _fock_rows(n: int, cs: Sequence[float], T: float, tol: Tolerances) -> List[dict]:
    state = state_factory.build(state_factory.StateSpec("fock", {"n": int(n)}), ModeLayout.of(int(n) + 1))
    w_in = phase_space.wln(state, tol)
    rows = []
    for c in cs:
        result = concentrate(state, T, DetectorWindow.heterodyne_ring(c), tol, wln_in=w_in)
        rows.append({"n": int(n), **result.row(c), "ratio": result.wln_out / result.wln_in_global})
    return rows


def lossy_sweep(betas: Sequence[float], cs: Sequence[float], T: float = 0.5,
                tol: Tolerances = DEFAULT_TOLERANCES, workers: int = 1, progress: bool = False) -> List[dict]:
    """Heterodyne concentration of lossy single photons, one eta(epsilon) curve per beta."""
    job = partial(_lossy_rows, cs=[float(c) for c in cs], T=T, tol=tol)
    curves = parallel_map(job, [float(b) for b in betas], workers, "lossy", progress)
    return [row for curve in curves for row in curve]


def fock_sweep(ns: Sequence[int], cs: Sequence[float], T: float = 0.5,
               tol: Tolerances = DEFAULT_TOLERANCES, workers: int = 1, progress: bool = False) -> List[dict]:
    """Heterodyne concentration of Fock pairs with the single-copy ratio W(sigma)/W(rho x rho)."""
    job = partial(_fock_rows, cs=[float(c) for c in cs], T=T, tol=tol)
    curves = parallel_map(job, [int(n) for n in ns], workers, "fock", progress)
    return [row for curve in curves for row in curve]


# --- single-copy counter-example -----------------------------------------------

COUNTEREXAMPLE_TARGET = {"delta_wln": 0.05, "p": 5e-4, "eta": 8e-4}


@dataclass
class CounterexampleResult:
    beta: float
    wln_in: float
    wln_out: float
    delta_wln: float
    p: float
    eta: float
    output: DensityMatrix = None

    def row(self) -> dict:
        return {"beta": self.beta, "wln_in": self.wln_in, "wln_out": self.wln_out,
                "delta_wln": self.delta_wln, "p": self.p, "eta": self.eta}


def counterexample_run(beta: float, window: DetectorWindow, tol: Tolerances = DEFAULT_TOLERANCES) -> CounterexampleResult:
    """Heterodyne-sector conditioning of one mode of sqrt(1-b)|00> + sqrt(b)|11>."""
    if not 0.0 < beta < 1.0:
        raise InvalidArgumentError("beta must lie strictly between 0 and 1")
    if window.kind not in ("heterodyne_sector", "heterodyne_ring"):
        raise InvalidArgumentError("the counter-example conditions on a heterodyne window")
    psi = state_factory.pair_state(beta, ModeLayout.of(2, 2))
    wln_in = phase_space.wln(psi, tol)
    raw, p = condition(psi.to_density(), window_effect(window, 2), (1,), tol)
    output = raw.normalized()
    wln_out = phase_space.wln(output, tol)
    return CounterexampleResult(beta, wln_in, wln_out, wln_out - wln_in, p, p * wln_out / wln_in, output)


def counterexample_scan(betas: Sequence[float], window: DetectorWindow, tol: Tolerances = DEFAULT_TOLERANCES,
                        progress: bool = False):
    """Run the scan and return (results, best) with best closest to the reference triple."""
    results = [counterexample_run(b, window, tol) for b in tqdm(betas, desc="beta scan", disable=not progress)]

    def distance(res):
        if res.delta_wln <= 0:
            return math.inf
        return sum(math.log(getattr(res, k) / v) ** 2 for k, v in COUNTEREXAMPLE_TARGET.items())

    best = min(results, key=distance) if results else None
    return results, best
