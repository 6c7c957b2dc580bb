"""Wigner functions of truncated Fock states and their negativity.

Single-mode integrals use tensor Gauss-Legendre panels that are bisected
wherever the Wigner function changes sign, so the kink of |W| along the zero
set is resolved locally. Two-mode integrals run along rays of the 4D phase
space: the sign changes on every ray are bracketed and bisected, only the
negative stretches are integrated, and the ray directions are covered by
trapezoid grids in the two phase angles and an adaptive rule in the angle
that splits the radius between the modes.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import gammaln, roots_legendre

from config import DEFAULT_TOLERANCES, Tolerances
from errors import ConvergenceFailure, InvalidArgumentError, NumericalInconsistencyError
from fock_core import DensityMatrix, ModeLayout, State, fsum_real, mean_photon_number, partial_trace

logger = logging.getLogger(__name__)

PANEL_ORDER = 6
CHUNK_POINTS = 1 << 17
MAX_PANEL_DEPTH = 14
RADIAL_ORDER = 24
BISECTION_STEPS = 36
SCHMIDT_CUTOFF = 1e-14
CHI_INTERVAL_LIMIT = 200


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(int(n))
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def default_half_width(nbar: float) -> float:
    return max(6.0, 4.0 * math.sqrt(2.0 * max(nbar, 0.0) + 1.0))


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor Gauss-Legendre grid, one (x, p) plane per mode."""

    half_widths: Tuple[float, ...]
    nodes: Tuple[int, ...]

    def __post_init__(self):
        if len(self.half_widths) != len(self.nodes):
            raise InvalidArgumentError("one half-width and node count per mode")
        if any(L <= 0 for L in self.half_widths) or any(n < 2 for n in self.nodes):
            raise InvalidArgumentError("half-widths must be positive and node counts >= 2")

    @classmethod
    def uniform(cls, n_modes: int, half_width: float, nodes: int):
        return cls(tuple([float(half_width)] * n_modes), tuple([int(nodes)] * n_modes))

    @property
    def n_modes(self) -> int:
        return len(self.nodes)

    def axis(self, mode: int) -> Tuple[np.ndarray, np.ndarray]:
        t, w = gauss_legendre(self.nodes[mode])
        L = self.half_widths[mode]
        return L * t, L * w

    def plane(self, mode: int):
        """Flattened (x, p, weight) for one mode's plane, x-major."""
        u, w = self.axis(mode)
        X, P = np.meshgrid(u, u, indexing="ij")
        return X.ravel(), P.ravel(), np.outer(w, w).ravel()


@dataclass(frozen=True)
class WignerSamples:
    grid: PhaseGrid
    values: np.ndarray

    def integral(self) -> float:
        w = self.values
        for mode in range(self.grid.n_modes):
            _, weights = self.grid.axis(mode)
            w = np.tensordot(w, weights, axes=([0], [0]))
            w = np.tensordot(w, weights, axes=([0], [0]))
        return float(w)

    def marginal_x(self) -> np.ndarray:
        """Integral over p for a single-mode sample set."""
        if self.grid.n_modes != 1:
            raise InvalidArgumentError("marginal_x is defined for one mode")
        _, weights = self.grid.axis(0)
        return self.values @ weights

    def export_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        axes = []
        names = []
        for mode in range(self.grid.n_modes):
            u, _ = self.grid.axis(mode)
            axes += [u, u]
            suffix = "" if self.grid.n_modes == 1 else f"_{mode}"
            names += [f"x{suffix}", f"p{suffix}"]
        mesh = np.meshgrid(*axes, indexing="ij")
        table = np.column_stack([m.ravel() for m in mesh] + [self.values.ravel()])
        np.savetxt(path, table, delimiter=",", header=",".join(names + ["w"]), comments="", fmt="%.12e")
        return path


@dataclass
class NegativityResult:
    negativity: float
    wln: float
    abs_integral: float
    dim_used: Tuple[int, ...]
    grid: dict = field(default_factory=dict)
    evaluations: int = 0


# --- basis functions --------------------------------------------------------

def _diagonal_terms(k: int, count: int, t: np.ndarray):
    """Yield (-1)^n sqrt(n!/(n+k)!) rho^k e^{-t/2} L_n^k(t) for n < count, with rho = sqrt(t)."""
    with np.errstate(divide="ignore"):
        log_rho = 0.5 * np.log(t)
    log_s0 = (k * log_rho if k else 0.0) - 0.5 * gammaln(k + 1) - 0.5 * t
    s_prev = np.exp(log_s0)
    yield s_prev
    if count == 1:
        return
    s_curr = s_prev * (1.0 + k - t) / math.sqrt(k + 1.0)
    yield -s_curr
    for n in range(1, count - 1):
        s_next = ((2 * n + 1 + k - t) * s_curr - math.sqrt(n * (n + k)) * s_prev) / math.sqrt((n + 1) * (n + 1 + k))
        s_prev, s_curr = s_curr, s_next
        yield s_curr if (n + 1) % 2 == 0 else -s_curr


def _polar(x, p):
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = x * x + p * p
    r = np.sqrt(r2)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(r > 0, (x + 1j * p) / np.where(r > 0, r, 1.0), 1.0)
    return 2.0 * r2, z


def wigner_basis(n: int, m: int, x, p) -> np.ndarray:
    """W[|n><m|](x, p); Hermitian in the sense W[|m><n|] = conj W[|n><m|]."""
    if n < 0 or m < 0:
        raise InvalidArgumentError("Fock indices must be non-negative")
    lo, k = min(n, m), abs(m - n)
    t, z = _polar(x, p)
    for term in _diagonal_terms(k, lo + 1, t):
        pass
    value = term * z ** k / math.pi
    return value if m >= n else np.conj(value)


def basis_table(dim: int, x, p) -> np.ndarray:
    """All W[|n><m|] at the given points, shape (dim, dim, npoints)."""
    t, z = _polar(np.ravel(x), np.ravel(p))
    table = np.empty((dim, dim, t.size), dtype=complex)
    zk = np.ones_like(z)
    for k in range(dim):
        for n, s in enumerate(_diagonal_terms(k, dim - k, t)):
            value = s * zk / math.pi
            table[n, n + k] = value
            table[n + k, n] = np.conj(value)
        zk = zk * z
    return table


def _effective_dim(matrix: np.ndarray, cutoff: float = 1e-15) -> int:
    diag = np.abs(np.diag(matrix))
    occupied = np.nonzero(diag > cutoff * max(1.0, diag.max()))[0]
    return max(1, int(occupied[-1]) + 1) if occupied.size else 1


def _single_mode_values(rho: np.ndarray, x, p, residue_tol: float) -> np.ndarray:
    dim = rho.shape[0]
    t, z = _polar(x, p)
    total = np.zeros(t.shape, dtype=complex)
    zk = np.ones_like(z)
    for k in range(dim):
        upper = np.zeros(t.shape, dtype=complex)
        lower = np.zeros(t.shape, dtype=complex)
        for n, s in enumerate(_diagonal_terms(k, dim - k, t)):
            upper += rho[n, n + k] * s
            if k:
                lower += rho[n + k, n] * s
        total += upper * zk
        if k:
            total += lower * np.conj(zk)
        zk = zk * z
    total /= math.pi
    scale = max(1.0, float(np.max(np.abs(total.real))) if total.size else 1.0)
    residue = float(np.max(np.abs(total.imag))) if total.size else 0.0
    if residue > residue_tol * scale:
        raise NumericalInconsistencyError(f"Wigner function has imaginary residue {residue:.3e}")
    return total.real


def wigner_values(state: State, x, p, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Single-mode Wigner function at arbitrary points (arrays broadcast)."""
    rho = state.to_density()
    if rho.layout.n_modes != 1:
        raise InvalidArgumentError("wigner_values evaluates one mode; use wigner_of for grids")
    mat = rho.matrix
    d = _effective_dim(mat)
    x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    out = np.empty(x.shape)
    flat_x, flat_p, flat_out = x.ravel(), p.ravel(), out.reshape(-1)
    for start in range(0, flat_x.size, CHUNK_POINTS):
        stop = start + CHUNK_POINTS
        flat_out[start:stop] = _single_mode_values(mat[:d, :d], flat_x[start:stop], flat_p[start:stop],
                                                   tol.imaginary_residue)
    return out


def _coefficient_matrix(rho: DensityMatrix) -> np.ndarray:
    """Coefficient of W_nm(A) W_kl(B), which is rho[(n,k),(m,l)], as a (dA^2, dB^2) matrix."""
    dA, dB = rho.layout.dims
    return np.transpose(rho.matrix.reshape(dA, dB, dA, dB), (0, 2, 1, 3)).reshape(dA * dA, dB * dB)


def _real_values(values: np.ndarray, residue_tol: float) -> np.ndarray:
    if values.size:
        scale = max(1.0, float(np.max(np.abs(values.real))))
        if float(np.max(np.abs(values.imag))) > residue_tol * scale:
            raise NumericalInconsistencyError("two-mode Wigner function has an imaginary residue")
    return values.real


def wigner_of(state: State, grid: PhaseGrid, tol: Tolerances = DEFAULT_TOLERANCES) -> WignerSamples:
    rho = state.to_density()
    if grid.n_modes != rho.layout.n_modes:
        raise InvalidArgumentError("grid and state disagree on the number of modes")
    if rho.layout.n_modes == 1:
        x, p, _ = grid.plane(0)
        n = grid.nodes[0]
        return WignerSamples(grid, wigner_values(rho, x, p, tol).reshape(n, n))
    if rho.layout.n_modes != 2:
        raise InvalidArgumentError("Wigner grids are supported for one or two modes")
    dA, dB = rho.layout.dims
    xa, pa, _ = grid.plane(0)
    xb, pb, _ = grid.plane(1)
    table_a = basis_table(dA, xa, pa).reshape(dA * dA, -1)
    combined = _coefficient_matrix(rho) @ basis_table(dB, xb, pb).reshape(dB * dB, -1)
    values = _real_values(table_a.T @ combined, tol.imaginary_residue)
    na, nb = grid.nodes
    return WignerSamples(grid, values.reshape(na, na, nb, nb))


# --- negativity -------------------------------------------------------------

def _panel_nodes(cx, cy, h, t):
    half = 0.5 * h
    X = cx[:, None, None] + half[:, None, None] * t[None, :, None]
    P = cy[:, None, None] + half[:, None, None] * t[None, None, :]
    return X, P


def _negative_volume_adaptive(rho: DensityMatrix, half_width: float, tol: Tolerances):
    """Integral of max(-W, 0) over [-L, L]^2 by sign-adaptive panel bisection."""
    d = _effective_dim(rho.matrix)
    mat = rho.matrix[:d, :d]
    t, w = gauss_legendre(PANEL_ORDER)
    ww = np.outer(w, w)
    base = min(0.5, 1.5 / math.sqrt(max(d, 1)))
    count = int(math.ceil(2 * half_width / base))
    h0 = 2 * half_width / count
    centres = -half_width + h0 * (np.arange(count) + 0.5)
    CX, CY = np.meshgrid(centres, centres, indexing="ij")
    cx, cy, h = CX.ravel(), CY.ravel(), np.full(CX.size, h0)

    settled = []
    pending_estimate = 0.0
    previous = None
    evaluations = 0
    edge_negative = False
    trace = float(np.real(np.trace(mat)))
    for depth in range(MAX_PANEL_DEPTH + 1):
        X, P = _panel_nodes(cx, cy, h, t)
        V = _single_mode_values(mat, X.ravel(), P.ravel(), tol.imaginary_residue).reshape(X.shape)
        evaluations += V.size
        V = np.where(np.abs(V) < tol.zero_clip, 0.0, V)
        neg = np.einsum("kij,ij->k", np.maximum(-V, 0.0), ww) * (0.5 * h) ** 2
        mixed = (V.max(axis=(1, 2)) > 0) & (V.min(axis=(1, 2)) < 0)
        if depth == 0:
            rim = (np.abs(cx) + 0.5 * h >= half_width - 1e-12) | (np.abs(cy) + 0.5 * h >= half_width - 1e-12)
            edge_negative = bool(np.any(neg[rim] > tol.integration_tol * 1e-3))
        settled.append(fsum_real(neg[~mixed]))
        pending_estimate = fsum_real(neg[mixed])
        estimate = math.fsum(settled) + pending_estimate
        absolute = trace + 2.0 * estimate
        if not mixed.any():
            return estimate, evaluations, depth, edge_negative
        if previous is not None and abs(estimate - previous) <= tol.integration_tol * absolute:
            return estimate, evaluations, depth, edge_negative
        previous = estimate
        cx, cy, h = cx[mixed], cy[mixed], h[mixed] / 2
        offsets = np.array([(-1, -1), (-1, 1), (1, -1), (1, 1)], dtype=float)
        cx = (cx[:, None] + 0.5 * h[:, None] * offsets[None, :, 0]).ravel()
        cy = (cy[:, None] + 0.5 * h[:, None] * offsets[None, :, 1]).ravel()
        h = np.repeat(h, 4)
    raise ConvergenceFailure("negative volume did not converge",
                             {"depth": MAX_PANEL_DEPTH, "estimate": estimate, "last_change": abs(estimate - previous),
                              "half_width": half_width, "evaluations": evaluations})


# --- two-mode negativity ------------------------------------------------------

def _support_block(rho: DensityMatrix) -> DensityMatrix:
    """Drop Fock levels that carry no population on either mode."""
    dA, dB = rho.layout.dims
    a, b = (max(2, _effective_dim(partial_trace(rho, (k,)).matrix)) for k in (0, 1))
    if (a, b) == (dA, dB):
        return rho
    mat = rho.matrix.reshape(dA, dB, dA, dB)[:a, :b, :a, :b].reshape(a * b, a * b)
    return DensityMatrix(ModeLayout.of(a, b), mat, rho.unnormalized)


def _factor_values(weights: np.ndarray, dim: int, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """weights @ vec(W[|n><m|]) at every point; weights has shape (rank, dim * dim)."""
    out = np.empty((weights.shape[0], x.size), dtype=complex)
    step = max(1024, (1 << 22) // (dim * dim))
    for start in range(0, x.size, step):
        stop = start + step
        out[:, start:stop] = weights @ basis_table(dim, x[start:stop], p[start:stop]).reshape(dim * dim, -1)
    return out


class PolarSlice:
    """Negative Wigner volume carried by the rays of one splitting angle chi.

    A two-mode point is (R cos(chi) e^{i theta_A}, R sin(chi) e^{i theta_B}) with
    R in [0, radius]; the phase angles sit on trapezoid grids. The state is
    factored through an SVD of its coefficient matrix, W = sum_s f_s(A) g_s(B),
    so every point costs one single-mode table per mode.
    """

    def __init__(self, rho: DensityMatrix, radius: float, theta_nodes: Tuple[int, int],
                 tol: Tolerances = DEFAULT_TOLERANCES):
        self.dims = rho.layout.dims
        u, s, vh = np.linalg.svd(_coefficient_matrix(rho), full_matrices=False)
        keep = s > SCHMIDT_CUTOFF * s[0]
        self.left = (u[:, keep] * s[keep]).T
        self.right = vh[keep]
        self.radius = float(radius)
        self.tol = tol
        self.theta = [2.0 * math.pi * np.arange(n) / n for n in theta_nodes]
        self.ray_weight = (2.0 * math.pi) ** 2 / (theta_nodes[0] * theta_nodes[1])
        count = 32 + int(math.ceil(12.0 * self.radius * math.sqrt(sum(self.dims) - 1)))
        self.samples = np.linspace(0.0, self.radius, count)
        ta, tb = np.meshgrid(*self.theta, indexing="ij")
        self.ray_a, self.ray_b = ta.ravel(), tb.ravel()
        self.edge_negative = False
        self.calls = 0
        self.roots = 0

    @property
    def rank(self) -> int:
        return self.left.shape[0]

    def values(self, R: np.ndarray, theta_a: np.ndarray, theta_b: np.ndarray, chi: float) -> np.ndarray:
        ra, rb = R * math.cos(chi), R * math.sin(chi)
        fa = _factor_values(self.left, self.dims[0], ra * np.cos(theta_a), ra * np.sin(theta_a))
        fb = _factor_values(self.right, self.dims[1], rb * np.cos(theta_b), rb * np.sin(theta_b))
        return _real_values(np.einsum("sk,sk->k", fa, fb), self.tol.imaginary_residue)

    def _plane(self, weights, dim, theta, radial):
        x = radial[None, :] * np.cos(theta)[:, None]
        p = radial[None, :] * np.sin(theta)[:, None]
        return _factor_values(weights, dim, x.ravel(), p.ravel()).reshape(weights.shape[0], theta.size, radial.size)

    def sampled(self, chi: float) -> np.ndarray:
        """W on every ray at the radial samples, shape (rays, samples)."""
        R = self.samples
        fa = self._plane(self.left, self.dims[0], self.theta[0], R * math.cos(chi))
        fb = self._plane(self.right, self.dims[1], self.theta[1], R * math.sin(chi))
        values = _real_values(np.einsum("sar,sbr->abr", fa, fb), self.tol.imaginary_residue)
        return values.reshape(-1, R.size)

    def __call__(self, chi) -> float:
        chi = float(chi)
        self.calls += 1
        clip = self.tol.zero_clip
        R = self.samples
        grid = self.sampled(chi)
        grid = np.where(np.abs(grid) < clip, 0.0, grid)
        if np.any(grid[:, -1] < 0.0):
            self.edge_negative = True
        sign = np.sign(grid)
        ray, col = np.nonzero(sign[:, :-1] * sign[:, 1:] < 0)
        self.roots += ray.size
        ta, tb = self.ray_a, self.ray_b
        lo, hi = R[col], R[col + 1]
        if ray.size:
            sign_lo = sign[ray, col]
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                keep_lo = np.sign(self.values(mid, ta[ray], tb[ray], chi)) == sign_lo
                lo = np.where(keep_lo, mid, lo)
                hi = np.where(keep_lo, hi, mid)
        # cut every ray at 0, its roots and the radius; integrate the negative stretches only
        n = ta.size
        owner = np.concatenate([np.arange(n), ray, np.arange(n)])
        cut = np.concatenate([np.zeros(n), 0.5 * (lo + hi), np.full(n, self.radius)])
        order = np.lexsort((cut, owner))
        owner, cut = owner[order], cut[order]
        same = owner[:-1] == owner[1:]
        a, b, owner = cut[:-1][same], cut[1:][same], owner[:-1][same]
        negative = self.values(0.5 * (a + b), ta[owner], tb[owner], chi) < 0.0
        a, b, owner = a[negative], b[negative], owner[negative]
        if not owner.size:
            return 0.0
        t, w = gauss_legendre(RADIAL_ORDER)
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, None] + half[:, None] * t[None, :]
        values = self.values(nodes.ravel(), np.repeat(ta[owner], t.size), np.repeat(tb[owner], t.size),
                             chi).reshape(nodes.shape)
        values = np.where(np.abs(values) < clip, 0.0, values)
        radial = half * ((nodes ** 3 * np.maximum(-values, 0.0)) @ w)
        return self.ray_weight * math.cos(chi) * math.sin(chi) * fsum_real(radial)


def _negative_volume_polar(rho: DensityMatrix, radius: float, theta_nodes: Tuple[int, int], tol: Tolerances):
    """Integral of max(-W, 0) over the 4D ball; returns (volume, slice, quad error)."""
    integrand = PolarSlice(rho, radius, theta_nodes, tol)
    volume, error, info = quad_vec(integrand, 0.0, 0.5 * math.pi, epsabs=0.125 * tol.integration_tol * rho.trace,
                                   epsrel=0.0, limit=CHI_INTERVAL_LIMIT, full_output=True)
    if info.status != 0:
        raise ConvergenceFailure("chi integral did not reach its tolerance",
                                 {"radius": radius, "theta_nodes": list(theta_nodes), "error": float(error),
                                  "intervals": int(info.intervals.shape[0])})
    return float(volume), integrand, float(error)


def _two_mode_report(rho: DensityMatrix, tol: Tolerances, half_width: Optional[float]) -> NegativityResult:
    dims = rho.layout.dims
    rho = _support_block(rho)
    trace = rho.trace
    radius = half_width or default_half_width(mean_photon_number(rho) / trace)
    theta_nodes = tuple(max(8, 2 * d + 2) for d in rho.layout.dims)
    previous = None
    history = []
    widenings = levels = 0
    while True:
        neg, integrand, error = _negative_volume_polar(rho, radius, theta_nodes, tol)
        absolute = 1.0 + 2.0 * neg / trace
        history.append(absolute)
        logger.debug("two-mode |W| integral %.10f with phase grids %s, radius %.1f", absolute, theta_nodes, radius)
        if integrand.edge_negative:
            if widenings >= tol.max_refinements:
                raise ConvergenceFailure("integration ball never enclosed the negative region",
                                         {"radius": radius, "history": history})
            logger.info("negative region reaches the integration edge; doubling radius to %.1f", 2 * radius)
            radius *= 2
            widenings += 1
            previous = None
            continue
        if previous is not None and abs(absolute - previous) <= tol.integration_tol * absolute:
            grid = {"rule": "polar rays", "radius": radius, "theta_nodes": list(theta_nodes),
                    "chi_evaluations": integrand.calls, "roots": integrand.roots, "chi_error": error,
                    "schmidt_rank": integrand.rank, "support": list(rho.layout.dims),
                    "tolerance": tol.integration_tol, "factorized": False}
            return NegativityResult(absolute - 1.0, math.log2(absolute), absolute, dims, grid,
                                    integrand.calls * integrand.ray_a.size)
        levels += 1
        if levels >= tol.max_refinements:
            raise ConvergenceFailure("two-mode negativity did not converge",
                                     {"theta_nodes": list(theta_nodes), "radius": radius, "history": history})
        previous = absolute
        theta_nodes = tuple(2 * n for n in theta_nodes)


def _is_product(rho: DensityMatrix, atol: float = 1e-12) -> Optional[Tuple[DensityMatrix, DensityMatrix]]:
    if rho.layout.n_modes != 2:
        return None
    a = partial_trace(rho, (0,))
    b = partial_trace(rho, (1,))
    tr = rho.trace
    if tr <= 0:
        return None
    if np.max(np.abs(np.kron(a.matrix, b.matrix) / tr - rho.matrix)) <= atol:
        return a, DensityMatrix(b.layout, b.matrix / tr, b.unnormalized)
    return None


def _half_width_for(rho: DensityMatrix) -> float:
    nbar = mean_photon_number(rho) / max(rho.trace, 1e-300)
    return default_half_width(nbar / rho.layout.n_modes)


def negativity_report(state: State, tol: Tolerances = DEFAULT_TOLERANCES, half_width: Optional[float] = None,
                      factorize: bool = True) -> NegativityResult:
    """Negativity, WLN and integration diagnostics of a one- or two-mode state."""
    rho = state.to_density()
    dims = rho.layout.dims
    trace = rho.trace
    if rho.layout.n_modes == 1:
        L = half_width or _half_width_for(rho)
        for _ in range(tol.max_refinements):
            neg, evaluations, depth, edge_negative = _negative_volume_adaptive(rho, L, tol)
            if not edge_negative:
                break
            logger.info("negative region reaches the integration edge; doubling half-width to %.1f", 2 * L)
            L *= 2
        else:
            raise ConvergenceFailure("integration window never enclosed the negative region", {"half_width": L})
        N = 2.0 * neg / trace
        return NegativityResult(N, math.log2(N + 1.0), 1.0 + N, dims,
                                {"half_width": L, "panel_depth": depth, "rule": f"adaptive GL{PANEL_ORDER}"},
                                evaluations)
    if rho.layout.n_modes != 2:
        raise InvalidArgumentError("negativity is implemented for one or two modes")
    if factorize:
        parts = _is_product(rho)
        if parts is not None:
            ra = negativity_report(parts[0], tol, half_width)
            rb = negativity_report(parts[1], tol, half_width)
            absolute = ra.abs_integral * rb.abs_integral
            return NegativityResult(absolute - 1.0, ra.wln + rb.wln, absolute, dims,
                                    {"factorized": True, "modes": [ra.grid, rb.grid]},
                                    ra.evaluations + rb.evaluations)
    return _two_mode_report(rho, tol, half_width)


def negativity(state: State, tol: Tolerances = DEFAULT_TOLERANCES, **kwargs) -> float:
    return negativity_report(state, tol, **kwargs).negativity


def wln(state: State, tol: Tolerances = DEFAULT_TOLERANCES, **kwargs) -> float:
    """Wigner logarithmic negativity in bits."""
    return math.log2(negativity(state, tol, **kwargs) + 1.0)

