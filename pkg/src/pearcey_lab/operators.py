"""Integrable-operator assembly and the generating function as a Fredholm determinant.

The central object is the operator K on L^2(Sigma u iR) with kernel

    K(u, v) = f~(u)^T g~(v) / (u - v),

where the dressed vectors f~, g~ have one component supported on Sigma and N
components supported on the imaginary axis (and vice versa), built from the
shared phase

    theta_x(mu) = mu^4/4 - tau*mu^2/2 - x*mu.

The generating function F of interval occupancy numbers equals
det(1 - K); it also equals the determinant of the classical Pearcey kernel
operator acting on the shifted intervals with weights k_j.  Both routes are
implemented; their agreement is one of the package's acceptance tests.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import GridDegeneracyError, PrecisionLossError, UnderResolvedError
from .quadrature import Grid, build_contours, discretize

#: Largest exponent magnitude accepted when dressing the contours; beyond
#: this, exp() would overflow/underflow to the point of losing the kernel.
_EXPONENT_LIMIT = 700.0

_TWO_PI_I = 2j * np.pi


def theta(mu, x, tau):
    """Phase function theta_x(mu) = mu^4/4 - tau*mu^2/2 - x*mu."""
    mu = np.asarray(mu)
    return 0.25 * mu**4 - 0.5 * tau * mu**2 - x * mu


@dataclass(frozen=True)
class ModelConfig:
    """A problem instance: thresholds a_1 < ... < a_N, weights k_0..k_N, tau, shift s.

    The weight vector must satisfy k_0 = k_N = 0, interior k_j in [0, 1] and
    consecutive entries distinct.  Configurations with k_j = k_{j+1}
    (including the all-zero vector) are degenerate limits used by tests only;
    pass ``allow_degenerate=True`` to accept them.
    """

    a: tuple[float, ...]
    k: tuple[float, ...]
    tau: float
    s: float
    allow_degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "k", tuple(float(x) for x in self.k))
        n = len(self.a)
        if n < 2:
            raise ValueError("need at least two thresholds (N >= 2)")
        if len(self.k) != n + 1:
            raise ValueError(f"k must have length N+1 = {n + 1}, got {len(self.k)}")
        if not all(math.isfinite(x) for x in self.a + self.k + (self.tau, self.s)):
            raise ValueError("all configuration entries must be finite")
        if any(x >= y for x, y in zip(self.a[:-1], self.a[1:])):
            raise ValueError("thresholds a must be strictly increasing")
        if self.k[0] != 0.0 or self.k[-1] != 0.0:
            raise ValueError("k_0 and k_N must be zero")
        if any(not (0.0 <= kj <= 1.0) for kj in self.k[1:-1]):
            raise ValueError("interior k_j must lie in [0, 1]")
        if not self.allow_degenerate:
            if any(x == y for x, y in zip(self.k[:-1], self.k[1:])):
                raise ValueError(
                    "consecutive k_j must differ (pass allow_degenerate=True "
                    "for degenerate test configurations)"
                )

    @property
    def n_thresholds(self) -> int:
        return len(self.a)

    @property
    def dk(self) -> np.ndarray:
        """Weight increments k_j - k_{j-1}, j = 1..N."""
        return np.diff(np.asarray(self.k))

    def with_s(self, s: float) -> "ModelConfig":
        return replace(self, s=float(s))

    def with_tau(self, tau: float) -> "ModelConfig":
        return replace(self, tau=float(tau))

    def to_json_dict(self) -> dict:
        d = {"a": list(self.a), "k": list(self.k), "tau": self.tau, "s": self.s}
        if self.allow_degenerate:
            d["allow_degenerate"] = True
        return d

    @classmethod
    def from_json_dict(cls, data: dict) -> "ModelConfig":
        return cls(
            a=tuple(data["a"]),
            k=tuple(data["k"]),
            tau=float(data["tau"]),
            s=float(data["s"]),
            allow_degenerate=bool(data.get("allow_degenerate", False)),
        )

    def config_hash(self) -> str:
        payload = json.dumps(self.to_json_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class DressedVectors:
    """Values of the dressed vectors at the grid nodes, shape (N+1, M).

    Component 0 of f_vals lives on Sigma, components 1..N on the imaginary
    axis; g_vals the other way around.
    """

    f_vals: np.ndarray
    g_vals: np.ndarray


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense Nystrom matrix entries[i, j] = K(u_i, u_j) * w_j."""

    entries: np.ndarray
    grid: Grid = field(repr=False)
    config: ModelConfig = field(repr=False)


@dataclass(frozen=True)
class DetResult:
    value: float
    log_value: float
    im_leak: float


def _sqrt_increments(dk: np.ndarray, branch_flip: bool) -> np.ndarray:
    """Principal square roots of the weight increments.

    Negative increments get +i*sqrt(|dk|); ``branch_flip`` selects the other
    branch for those components.  Only products of pairs enter determinants,
    so the flip is observable only in the phases of the residue vectors.
    """
    roots = np.sqrt(dk.astype(complex))
    if branch_flip:
        roots = np.where(np.real(dk) < 0, -roots, roots)
    return roots


def _check_exponents(*exponents):
    worst = max(float(np.max(np.abs(np.real(e)))) if e.size else 0.0 for e in exponents)
    if worst > _EXPONENT_LIMIT:
        raise PrecisionLossError(
            f"dressing exponent real part {worst:.1f} exceeds {_EXPONENT_LIMIT}; "
            "truncation radius too large for the requested shift"
        )


def _dressing_arrays(a, dk, tau, s, grid: Grid, branch_flip: bool) -> DressedVectors:
    mu = grid.nodes
    n = len(a)
    roots = _sqrt_increments(np.asarray(dk, dtype=complex), branch_flip)
    sig = grid.sigma_mask
    imag = grid.imag_mask

    th0 = theta(mu, 0.0, tau)
    f_vals = np.zeros((n + 1, len(mu)), dtype=complex)
    g_vals = np.zeros((n + 1, len(mu)), dtype=complex)

    exp_sig = 0.5 * th0[sig]
    exp_imag = -0.5 * th0[imag]
    exp_f_imag = exp_imag[None, :] + np.multiply.outer(np.asarray(a) + s, mu[imag])
    exp_g_sig = 0.5 * th0[sig][None, :] - np.multiply.outer(np.asarray(a) + s, mu[sig])
    _check_exponents(exp_sig, exp_imag, exp_f_imag, exp_g_sig)

    f_vals[0, sig] = np.exp(exp_sig) / _TWO_PI_I
    f_vals[1:, imag] = roots[:, None] * np.exp(exp_f_imag) / _TWO_PI_I
    g_vals[0, imag] = np.exp(exp_imag)
    g_vals[1:, sig] = roots[:, None] * np.exp(exp_g_sig)
    return DressedVectors(f_vals=f_vals, g_vals=g_vals)


def dressing_vectors(config: ModelConfig, grid: Grid, branch_flip: bool = False) -> DressedVectors:
    """Dressed vectors f~, g~ evaluated at every grid node."""
    return _dressing_arrays(config.a, config.dk, config.tau, config.s, grid, branch_flip)


def _entries_from_dressing(dressed: DressedVectors, grid: Grid) -> np.ndarray:
    u = grid.nodes
    numer = dressed.f_vals.T @ dressed.g_vals
    denom = u[:, None] - u[None, :]
    off_diag = ~np.eye(len(u), dtype=bool)
    closest = np.min(np.abs(denom[off_diag]))
    if closest < 1e-14:
        raise GridDegeneracyError(
            f"distinct quadrature nodes {closest:.2e} apart; refusing to divide"
        )
    np.fill_diagonal(denom, 1.0)
    entries = (numer / denom) * grid.weights[None, :]
    # component supports are disjoint, so K(u, u) = 0 identically
    np.fill_diagonal(entries, 0.0)
    return entries


def assemble_K(config: ModelConfig, grid: Grid, branch_flip: bool = False) -> OperatorMatrix:
    """Nystrom matrix of the integrable operator on Sigma u iR.

    The entries depend on k only through the increments dk_j (the square
    roots pair up within each component product), hence extend entirely to
    complex weights.
    """
    dressed = dressing_vectors(config, grid, branch_flip)
    return OperatorMatrix(entries=_entries_from_dressing(dressed, grid), grid=grid, config=config)


def _assemble_entries_general(a, kvec, tau, s, grid: Grid) -> np.ndarray:
    """Entries for arbitrary (possibly complex) weight vectors; internal.

    Used by the occupancy-number extraction, which evaluates the determinant
    at complex k on Cauchy circles.
    """
    kvec = np.asarray(kvec, dtype=complex)
    dk = np.diff(kvec)
    dressed = _dressing_arrays(a, dk, tau, s, grid, branch_flip=False)
    return _entries_from_dressing(dressed, grid)


def _det_one_minus(entries: np.ndarray) -> complex:
    a = np.eye(len(entries), dtype=complex) - entries
    sign, logabs = np.linalg.slogdet(a)
    return complex(sign * np.exp(logabs))


def det_one_minus_K(m: OperatorMatrix) -> DetResult:
    """det(1 - K) via pivoted dense LU, with realness and positivity checks."""
    entries = m.entries
    if not np.all(np.isfinite(entries)):
        raise ValueError("operator matrix contains non-finite entries")
    det = _det_one_minus(entries)
    value = det.real
    im_leak = abs(det.imag)
    if im_leak > 1e-8 * (1.0 + abs(value)):
        raise PrecisionLossError(
            f"determinant imaginary leakage {im_leak:.3e} at value {value:.6e}"
        )
    if value <= 0.0:
        raise UnderResolvedError(
            f"determinant {value:.3e} <= 0; the generating function is strictly "
            "positive, so the grid is under-resolved"
        )
    return DetResult(value=value, log_value=math.log(value), im_leak=im_leak)


def genfun(config: ModelConfig, grid: Grid) -> float:
    """Generating function F(a+s, tau, k) = det(1 - K) on the contour grid."""
    result = det_one_minus_K(assemble_K(config, grid))
    if result.value > 1.0 + 1e-8:
        raise PrecisionLossError(f"generating function {result.value} exceeds 1")
    return result.value


def _genfun_complex_k(config: ModelConfig, kvec, grid: Grid) -> complex:
    """Analytic continuation of F to complex interior weights; internal."""
    entries = _assemble_entries_general(config.a, kvec, config.tau, config.s, grid)
    return _det_one_minus(entries)


def _exp_theta_on(grid: Grid, xs: np.ndarray, tau: float, sign: int, mask: np.ndarray) -> np.ndarray:
    """exp(sign * theta_x(mu)) for each x in xs and mu in grid.nodes[mask]."""
    mu = grid.nodes[mask]
    expo = sign * (0.25 * mu**4 - 0.5 * tau * mu**2)[None, :] - sign * np.multiply.outer(xs, mu)
    _check_exponents(expo)
    return np.exp(expo)


def kernel_KP_matrix(xs, config: ModelConfig, grid: Grid) -> np.ndarray:
    """Pearcey kernel K_P(x_i, x_j; tau) for all pairs from ``xs``.

    Evaluated as a bilinear form through the grid's shared Cauchy matrix:
    one (n_sigma x n_imag) precompute plus two dense products per call.
    """
    xs = np.asarray(xs, dtype=float)
    e_sig = _exp_theta_on(grid, xs, config.tau, +1, grid.sigma_mask)      # exp(theta_x(mu))
    e_imag = _exp_theta_on(grid, xs, config.tau, -1, grid.imag_mask)      # exp(-theta_y(lambda))
    w_sig = grid.weights[grid.sigma_mask]
    w_imag = grid.weights[grid.imag_mask]
    cauchy = grid.cauchy_imag_sigma                                        # (n_imag, n_sigma)
    km = (e_sig * w_sig[None, :]) @ cauchy.T @ (e_imag * w_imag[None, :]).T
    km /= _TWO_PI_I**2
    scale = np.max(np.abs(km.real)) + 1e-300
    leak = np.max(np.abs(km.imag))
    if leak > 1e-8 * (1.0 + scale):
        raise PrecisionLossError(f"Pearcey kernel imaginary leakage {leak:.3e}")
    return km.real


def kernel_KP(x: float, y: float, config: ModelConfig, grid: Grid) -> float:
    """Pearcey kernel K_P(x, y; tau) by double contour quadrature."""
    xs = np.array([x], dtype=float)
    ys = np.array([y], dtype=float)
    e_sig = _exp_theta_on(grid, xs, config.tau, +1, grid.sigma_mask)
    e_imag = _exp_theta_on(grid, ys, config.tau, -1, grid.imag_mask)
    w_sig = grid.weights[grid.sigma_mask]
    w_imag = grid.weights[grid.imag_mask]
    val = (e_imag[0] * w_imag) @ grid.cauchy_imag_sigma @ (e_sig[0] * w_sig)
    val /= _TWO_PI_I**2
    if abs(val.imag) > 1e-8 * (1.0 + abs(val.real)):
        raise PrecisionLossError(
            f"Pearcey kernel at ({x}, {y}) has imaginary leakage {abs(val.imag):.3e}"
        )
    return float(val.real)


def _interval_rule(config: ModelConfig, nodes_per_interval: int):
    """Gauss-Legendre nodes, weights and interval weights k_j on the shifted intervals."""
    from .quadrature import _legendre_rule

    x, w = _legendre_rule(nodes_per_interval)
    pts, wts, kfac = [], [], []
    for j in range(1, config.n_thresholds):
        lo = config.a[j - 1] + config.s
        hi = config.a[j] + config.s
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        pts.append(mid + half * x)
        wts.append(half * w)
        kfac.append(np.full(nodes_per_interval, config.k[j]))
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(kfac)


def genfun_via_KP(config: ModelConfig, grid: Grid, nodes_per_interval: int = 48) -> float:
    """Generating function through the Pearcey-kernel route.

    det(1 - sum_j k_j chi_j K_P) discretized on the shifted intervals with a
    symmetrized Nystrom matrix (all real-line weights are positive, so the
    square-root weighting is available on this route).
    """
    if nodes_per_interval < 2:
        raise ValueError("nodes_per_interval must be at least 2")
    pts, wts, kfac = _interval_rule(config, nodes_per_interval)
    km = kernel_KP_matrix(pts, config, grid)
    root_w = np.sqrt(kfac * wts)
    sym = root_w[:, None] * km * root_w[None, :]
    sign, logabs = np.linalg.slogdet(np.eye(len(sym)) - sym)
    value = float(sign * np.exp(logabs))
    if value <= 0.0:
        raise UnderResolvedError(f"interval-route determinant {value:.3e} <= 0")
    return value


def default_grid(
    config: ModelConfig,
    *,
    s_extent: float = 0.0,
    tau_extent: float = 0.0,
    target_eps: float = 1e-16,
    **quad_overrides,
) -> Grid:
    """Grid adequate for the configuration and for shifts/stencils around it.

    ``s_extent`` and ``tau_extent`` widen the truncation so finite-difference
    stencils and asymptotic sweeps can reuse one grid; a shared grid keeps
    the discretization error a smooth function of (s, tau), which the
    finite-difference checks rely on.
    """
    s_max = max(abs(a) for a in config.a) + abs(config.s) + abs(s_extent)
    tau_max = abs(config.tau) + abs(tau_extent)
    spec = build_contours(tau_max, s_max, target_eps, **quad_overrides)
    return discretize(spec)
