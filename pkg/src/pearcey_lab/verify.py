"""Residual checks for every identity satisfied by the generating function.

Each ``check_*`` function evaluates one identity numerically and reports the
defect relative to the largest participating term:

* log-derivative:    d/ds log F = -delta,
* second derivative: d^2/ds^2 log F = p^T q,
* residue flow:      d/ds delta = -p^T q,
* coupled third-order system in s for p and q,
* coupled nonlinear heat equation in (s, tau),
* fourth-order PDE for u = log F:
      u_tautau + (u_ss)^2/2 + u_ssss/12 - (tau/3) u_ss = 0,
* the intermediate identity d/dtau (p^T q) = d/ds(p^T q_s - p_s^T q)/2,
* large-s matching of p_i, q_i against the envelope-normalized special
  functions.

All s- and tau-derivatives come from centered finite differences with
optional Richardson extrapolation; one grid and one operator factorization
per stencil point are shared across checks through ``PointCache``, which
keeps the discretization error a smooth function of the stencil variable.

Occupancy probabilities are extracted from derivatives of F at k = 1 via
trapezoidal quadrature on Cauchy circles (spectrally accurate because the
determinant is entire in the weight increments).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import CostGuardError, PrecisionLossError
from .operators import ModelConfig, _genfun_complex_k, _sqrt_increments, default_grid
from .pearcey_functions import envelope, pearcey_P, pearcey_Q
from .quadrature import Grid
from .rhp import Gamma1, OperatorState

#: Pass thresholds (relative residuals) for each identity.
DEFAULT_TOLERANCES = {
    "logF_delta": 1e-5,
    "tw_formula": 1e-4,
    "delta_s": 1e-5,
    "ode3_p": 1e-3,
    "ode3_q": 1e-3,
    "heat_p": 1e-3,
    "heat_q": 1e-3,
    "pde": 1e-3,
    "tau_identity": 1e-3,
}


@dataclass(frozen=True)
class FDScheme:
    """Centered finite-difference scheme with optional Richardson levels."""

    step: float = 1e-2
    order: int = 1
    width: int = 5
    richardson: int = 1

    def __post_init__(self):
        if not (1e-4 <= self.step <= 1e-1):
            raise ValueError("step must lie in [1e-4, 1e-1]")
        if self.order not in (1, 2, 3, 4):
            raise ValueError("derivative order must be 1..4")
        if self.width not in (5, 7):
            raise ValueError("stencil width must be 5 or 7")
        if self.width <= self.order:
            raise ValueError("stencil too narrow for the requested order")
        if self.richardson not in (0, 1, 2):
            raise ValueError("richardson levels must be 0..2")

    @property
    def accuracy(self) -> int:
        """Truncation order of the base stencil (before extrapolation)."""
        return 2 * ((self.width - self.order + 1) // 2)

    def halved(self) -> "FDScheme":
        return replace(self, step=self.step / 2)


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one identity check at one evaluation point."""

    identity: str
    s: float
    tau: float
    config_hash: str
    residual: float
    scale: float
    tolerance: float
    passed: bool

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("report scale must be positive and finite")

    @property
    def relative(self) -> float:
        return self.residual / self.scale

    def to_json_dict(self) -> dict:
        return {
            "identity": self.identity,
            "s": self.s,
            "tau": self.tau,
            "config_hash": self.config_hash,
            "residual": self.residual,
            "scale": self.scale,
            "relative": self.relative,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@lru_cache(maxsize=32)
def fd_coefficients(order: int, width: int):
    """Centered difference coefficients for a unit step.

    Solves the small Vandermonde system sum_j c_j j^k = k! delta_{k,order}
    over offsets j = -m..m.
    """
    m = width // 2
    offsets = np.arange(-m, m + 1)
    vander = offsets[None, :].astype(float) ** np.arange(width)[:, None]
    rhs = np.zeros(width)
    rhs[order] = factorial(order)
    coeffs = np.linalg.solve(vander, rhs)
    return offsets, coeffs


def _stencil(func, x0, h, order, width):
    offsets, coeffs = fd_coefficients(order, width)
    samples = np.asarray([func(x0 + j * h) for j in offsets])
    return np.tensordot(coeffs, samples, axes=1) / h**order


def fd_derivative(func, x0: float, scheme: FDScheme):
    """Derivative estimate of ``func`` at ``x0``; works for scalar or array values."""
    estimates = [
        _stencil(func, x0, scheme.step / 2**level, scheme.order, scheme.width)
        for level in range(scheme.richardson + 1)
    ]
    power = scheme.accuracy
    while len(estimates) > 1:
        factor = 2.0**power
        estimates = [
            (factor * fine - coarse) / (factor - 1.0)
            for coarse, fine in zip(estimates[:-1], estimates[1:])
        ]
        power += 2
    return estimates[0]


class PointCache:
    """Memoized operator factorizations over (s, tau) for one configuration.

    Stencil evaluations at distinct points are independent; the cache only
    removes duplicate factorizations when several checks share points.
    """

    def __init__(self, config: ModelConfig, grid: Grid, branch_flip: bool = False,
                 check_tol: float = 1e-8):
        self.config = config
        self.grid = grid
        self.branch_flip = branch_flip
        self.check_tol = check_tol
        self._states: dict = {}

    def state(self, s: float | None = None, tau: float | None = None) -> OperatorState:
        s = self.config.s if s is None else float(s)
        tau = self.config.tau if tau is None else float(tau)
        key = (round(s, 12), round(tau, 12))
        if key not in self._states:
            cfg = replace(self.config, s=s, tau=tau)
            self._states[key] = OperatorState(cfg, self.grid, self.branch_flip)
        return self._states[key]

    def log_F(self, s=None, tau=None) -> float:
        return self.state(s, tau).log_F

    def gamma1(self, s=None, tau=None) -> Gamma1:
        state = self.state(s, tau)
        if not hasattr(state, "_gamma1_cache"):
            state._gamma1_cache = state.gamma1(self.check_tol)
        return state._gamma1_cache

    def pq(self, s=None, tau=None) -> float:
        return self.gamma1(s, tau).pq.real

    def p_and_q(self, s=None, tau=None):
        g1 = self.gamma1(s, tau)
        return g1.p, g1.q


def _make_report(identity, config, residual, scale, tolerance) -> ResidualReport:
    scale = float(scale) if scale > 0 else 1.0
    residual = float(residual)
    return ResidualReport(
        identity=identity,
        s=config.s,
        tau=config.tau,
        config_hash=config.config_hash(),
        residual=residual,
        scale=scale,
        tolerance=tolerance,
        passed=bool(residual <= tolerance * scale),
    )


def _cache_for(config, grid, cache, branch_flip=False) -> PointCache:
    if cache is not None:
        if cache.config.a != config.a or cache.config.k != config.k:
            raise ValueError("cache was built for a different configuration")
        return cache
    return PointCache(config, grid, branch_flip)


def check_logF_delta(config: ModelConfig, grid: Grid, scheme: FDScheme | None = None,
                     cache: PointCache | None = None) -> ResidualReport:
    """d/ds log F + delta = 0."""
    scheme = scheme or FDScheme(order=1, width=5, richardson=1)
    cache = _cache_for(config, grid, cache)
    d_logf = fd_derivative(lambda s: cache.log_F(s=s), config.s, replace(scheme, order=1))
    delta = cache.gamma1().delta
    return _make_report(
        "logF_delta", config,
        residual=abs(d_logf + delta),
        scale=1.0 + abs(delta),
        tolerance=DEFAULT_TOLERANCES["logF_delta"],
    )


def check_tw_formula(config: ModelConfig, grid: Grid, scheme: FDScheme | None = None,
                     cache: PointCache | None = None) -> ResidualReport:
    """d^2/ds^2 log F - p^T q = 0."""
    scheme = scheme or FDScheme(order=2, width=5, richardson=1)
    cache = _cache_for(config, grid, cache)
    d2_logf = fd_derivative(lambda s: cache.log_F(s=s), config.s, replace(scheme, order=2))
    pq = cache.pq()
    return _make_report(
        "tw_formula", config,
        residual=abs(d2_logf - pq),
        scale=1.0 + abs(pq),
        tolerance=DEFAULT_TOLERANCES["tw_formula"],
    )


def check_delta_s(config: ModelConfig, grid: Grid, scheme: FDScheme | None = None,
                  cache: PointCache | None = None) -> ResidualReport:
    """d/ds delta + p^T q = 0."""
    scheme = scheme or FDScheme(order=1, width=5, richardson=1)
    cache = _cache_for(config, grid, cache)
    d_delta = fd_derivative(lambda s: cache.gamma1(s=s).delta, config.s, replace(scheme, order=1))
    pq = cache.pq()
    return _make_report(
        "delta_s", config,
        residual=abs(d_delta + pq),
        scale=1.0 + abs(pq),
        tolerance=DEFAULT_TOLERANCES["delta_s"],
    )


def _max_norm_scale(*terms) -> float:
    return max(float(np.linalg.norm(np.atleast_1d(t))) for t in terms)


def check_ode3(config: ModelConfig, grid: Grid, scheme: FDScheme | None = None,
               cache: PointCache | None = None) -> list[ResidualReport]:
    """Coupled third-order system for p and q; returns the p-row and q-row."""
    scheme = scheme or FDScheme(order=3, width=7, richardson=1)
    cache = _cache_for(config, grid, cache)

    def p_of(s):
        return cache.p_and_q(s=s)[0]

    def q_of(s):
        return cache.p_and_q(s=s)[1]

    p0, q0 = cache.p_and_q()
    dp = fd_derivative(p_of, config.s, replace(scheme, order=1))
    dq = fd_derivative(q_of, config.s, replace(scheme, order=1))
    d3p = fd_derivative(p_of, config.s, replace(scheme, order=3))
    d3q = fd_derivative(q_of, config.s, replace(scheme, order=3))
    diag = np.asarray(config.a) + config.s
    tau = config.tau
    pq = p0 @ q0

    terms_p = [d3p, 3.0 * (dp @ q0) * p0, 3.0 * pq * dp, -tau * dp, p0 * diag]
    terms_q = [d3q, 3.0 * pq * dq, 3.0 * (p0 @ dq) * q0, -tau * dq, -diag * q0]
    res_p = float(np.linalg.norm(sum(terms_p)))
    res_q = float(np.linalg.norm(sum(terms_q)))
    return [
        _make_report("ode3_p", config, res_p, _max_norm_scale(*terms_p),
                     DEFAULT_TOLERANCES["ode3_p"]),
        _make_report("ode3_q", config, res_q, _max_norm_scale(*terms_q),
                     DEFAULT_TOLERANCES["ode3_q"]),
    ]


def check_heat(config: ModelConfig, grid: Grid, scheme_s: FDScheme | None = None,
               scheme_tau: FDScheme | None = None,
               cache: PointCache | None = None) -> list[ResidualReport]:
    """Coupled nonlinear heat equation; note the sign asymmetry between rows."""
    scheme_s = scheme_s or FDScheme(order=2, width=5, richardson=1)
    scheme_tau = scheme_tau or FDScheme(step=2e-2, order=1, width=5, richardson=1)
    cache = _cache_for(config, grid, cache)

    p0, q0 = cache.p_and_q()
    pq = p0 @ q0
    d2p = fd_derivative(lambda s: cache.p_and_q(s=s)[0], config.s, replace(scheme_s, order=2))
    d2q = fd_derivative(lambda s: cache.p_and_q(s=s)[1], config.s, replace(scheme_s, order=2))
    dtp = fd_derivative(lambda t: cache.p_and_q(tau=t)[0], config.tau, replace(scheme_tau, order=1))
    dtq = fd_derivative(lambda t: cache.p_and_q(tau=t)[1], config.tau, replace(scheme_tau, order=1))

    terms_p = [-0.5 * d2p, -dtp, -pq * p0]
    terms_q = [-0.5 * d2q, dtq, -pq * q0]
    return [
        _make_report("heat_p", config, float(np.linalg.norm(sum(terms_p))),
                     _max_norm_scale(*terms_p), DEFAULT_TOLERANCES["heat_p"]),
        _make_report("heat_q", config, float(np.linalg.norm(sum(terms_q))),
                     _max_norm_scale(*terms_q), DEFAULT_TOLERANCES["heat_q"]),
    ]


def check_pde(config: ModelConfig, grid: Grid, scheme_s: FDScheme | None = None,
              scheme_tau: FDScheme | None = None,
              cache: PointCache | None = None) -> ResidualReport:
    """Fourth-order PDE for u = log F (no mixed derivatives, so two 1D lines)."""
    scheme_s = scheme_s or FDScheme(order=4, width=7, richardson=1)
    scheme_tau = scheme_tau or FDScheme(step=2e-2, order=2, width=5, richardson=1)
    cache = _cache_for(config, grid, cache)

    u_s = lambda s: cache.log_F(s=s)
    u_tau = lambda t: cache.log_F(tau=t)
    d2u_tau = fd_derivative(u_tau, config.tau, replace(scheme_tau, order=2))
    d2u_s = fd_derivative(u_s, config.s, replace(scheme_s, order=2))
    d4u_s = fd_derivative(u_s, config.s, replace(scheme_s, order=4))

    terms = [d2u_tau, 0.5 * d2u_s**2, d4u_s / 12.0, -(config.tau / 3.0) * d2u_s]
    return _make_report(
        "pde", config,
        residual=abs(sum(terms)),
        scale=max(abs(t) for t in terms),
        tolerance=DEFAULT_TOLERANCES["pde"],
    )


def check_tau_identity(config: ModelConfig, grid: Grid, scheme_s: FDScheme | None = None,
                       scheme_tau: FDScheme | None = None,
                       cache: PointCache | None = None) -> ResidualReport:
    """d/dtau(p^T q) = d/ds (p^T q_s - p_s^T q) / 2."""
    scheme_s = scheme_s or FDScheme(order=1, width=5, richardson=0)
    scheme_tau = scheme_tau or FDScheme(step=2e-2, order=1, width=5, richardson=1)
    cache = _cache_for(config, grid, cache)

    lhs = fd_derivative(lambda t: cache.pq(tau=t), config.tau, replace(scheme_tau, order=1))

    def bracket(s):
        p, q = cache.p_and_q(s=s)
        dq = fd_derivative(lambda x: cache.p_and_q(s=x)[1], s, replace(scheme_s, order=1))
        dp = fd_derivative(lambda x: cache.p_and_q(s=x)[0], s, replace(scheme_s, order=1))
        return (p @ dq - dp @ q).real

    rhs = 0.5 * fd_derivative(bracket, config.s, replace(scheme_s, order=1))
    return _make_report(
        "tau_identity", config,
        residual=abs(lhs - rhs),
        scale=max(abs(lhs), abs(rhs)),
        tolerance=DEFAULT_TOLERANCES["tau_identity"],
    )


def check_asymptotics(config: ModelConfig, grid: Grid, s_list,
                      branch_flip: bool = False,
                      cache: PointCache | None = None) -> list[ResidualReport]:
    """Envelope-normalized defects of q_i ~ sqrt(dk_i) Q(a_i+s), p_i ~ sqrt(dk_i) P(a_i+s).

    One report per (branch, component, s); each report passes when its
    normalized residual is strictly below the previous s (components with
    dk_i = 0 are identically zero on both sides and always pass).
    """
    s_list = [float(s) for s in s_list]
    if sorted(s_list) != s_list or len(set(s_list)) != len(s_list):
        raise ValueError("s_list must be strictly increasing")
    if s_list[0] < 4.0:
        raise ValueError("asymptotic comparison needs s >= 4")
    cache = _cache_for(config, grid, cache, branch_flip)
    roots = _sqrt_increments(config.dk.astype(complex), branch_flip)

    reports = []
    prev: dict = {}
    for s_val in s_list:
        g1 = cache.gamma1(s=s_val)
        for i, root in enumerate(roots):
            x = config.a[i] + s_val
            for which, resid in (
                ("q", abs(g1.q[i] - root * pearcey_Q(x, config.tau, grid, 0).order(0))),
                ("p", abs(g1.p[i] - root * pearcey_P(x, config.tau, grid, 0).order(0))),
            ):
                env = envelope(x, config.tau, which.upper())
                if env == 0.0 or not math.isfinite(env):
                    raise ValueError(f"envelope underflow at s = {x}")
                rel = resid / env
                key = (which, i)
                if root == 0:
                    tol, passed = math.inf, True
                elif key in prev:
                    tol, passed = prev[key], bool(rel < prev[key])
                else:
                    tol, passed = math.inf, True
                reports.append(ResidualReport(
                    identity=f"asym_{which}{i + 1}",
                    s=s_val,
                    tau=config.tau,
                    config_hash=config.config_hash(),
                    residual=rel,
                    scale=1.0,
                    tolerance=tol,
                    passed=passed,
                ))
                prev[key] = rel
    return reports


# ---------------------------------------------------------------------------
# Occupancy-number probabilities
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _circle_values(config: ModelConfig, grid: Grid, rho: float, nodes: int) -> np.ndarray:
    """F on the tensor grid of Cauchy circles k_j = 1 + rho exp(2 pi i l / nodes)."""
    n_int = config.n_thresholds - 1
    omega = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    values = np.empty((nodes,) * n_int, dtype=complex)
    for idx in np.ndindex(values.shape):
        kvec = np.concatenate(([0.0], 1.0 + rho * omega[list(idx)], [0.0]))
        values[idx] = _genfun_complex_k(config, kvec, grid)
    return values


def occupancy_table(config: ModelConfig, m_max: int, rho: float = 0.5,
                    nodes: int = 32, grid: Grid | None = None) -> np.ndarray:
    """Joint occupancy probabilities P(#_j = m_j) for all m_j <= m_max.

    The determinant is entire in the weight increments, so trapezoidal
    sums on circles around k = 1 extract the Taylor coefficients with
    spectral accuracy.  Cost grows as nodes^(N-1); refused for N-1 > 3.
    """
    n_int = config.n_thresholds - 1
    if n_int > 3:
        raise CostGuardError(f"occupancy extraction for N-1 = {n_int} > 3 intervals")
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    if not (0 <= m_max < nodes):
        raise ValueError("need 0 <= m_max < nodes per circle")
    if grid is None:
        grid = default_grid(config)

    values = _circle_values(config, grid, float(rho), int(nodes))
    coeffs = np.fft.fftn(values) / nodes**n_int
    sub = coeffs[tuple(slice(0, m_max + 1) for _ in range(n_int))]

    orders = np.zeros(sub.shape)
    for axis in range(n_int):
        shape = [1] * n_int
        shape[axis] = m_max + 1
        orders = orders + np.arange(m_max + 1).reshape(shape)
    table = ((-1.0) ** orders) * sub / rho**orders

    leak = float(np.max(np.abs(table.imag)))
    probs = table.real
    if leak > 1e-6 or np.any(probs < -1e-4) or np.any(probs > 1 + 1e-4):
        raise PrecisionLossError(
            f"occupancy table outside [0, 1] (imag leak {leak:.2e}, "
            f"range [{probs.min():.2e}, {probs.max():.2e}])"
        )
    return probs


def occupancy(config: ModelConfig, m, rho: float = 0.5, nodes: int = 32,
              grid: Grid | None = None) -> float:
    """P(every interval (a_j+s, a_{j+1}+s) holds exactly m_j points)."""
    m_arr = np.atleast_1d(np.asarray(m, dtype=int))
    n_int = config.n_thresholds - 1
    if len(m_arr) != n_int:
        raise ValueError(f"m must have one entry per interval ({n_int})")
    if np.any(m_arr < 0):
        raise ValueError("occupancy numbers must be non-negative")
    table = occupancy_table(config, int(m_arr.max()), rho, nodes, grid)
    return float(table[tuple(m_arr)])


# ---------------------------------------------------------------------------
# Suite driver (used by the command-line front end)
# ---------------------------------------------------------------------------

SUITES = ("ode3", "heat", "pde", "tw", "delta", "tau-id", "asym")


def run_suite(config: ModelConfig, suites, *, fd_step: float | None = None,
              branch_flip: bool = False, s_list=(4.0, 6.0, 8.0),
              grid_overrides: dict | None = None) -> list[ResidualReport]:
    """Run the selected identity suites on one configuration."""
    chosen = list(SUITES) if "all" in suites else list(suites)
    unknown = set(chosen) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")

    overrides = dict(grid_overrides or {})
    step = {} if fd_step is None else {"step": fd_step}
    scheme1 = FDScheme(order=1, width=5, richardson=1, **step)
    scheme3 = FDScheme(order=3, width=7, richardson=1, **step)

    grid = default_grid(config, s_extent=0.2, tau_extent=0.1, **overrides)
    cache = PointCache(config, grid, branch_flip)
    reports: list[ResidualReport] = []
    for suite in chosen:
        if suite == "delta":
            reports.append(check_logF_delta(config, grid, scheme1, cache))
            reports.append(check_delta_s(config, grid, scheme1, cache))
        elif suite == "tw":
            reports.append(check_tw_formula(config, grid, scheme1, cache))
        elif suite == "ode3":
            reports.extend(check_ode3(config, grid, scheme3, cache))
        elif suite == "heat":
            reports.extend(check_heat(config, grid, cache=cache))
        elif suite == "pde":
            reports.append(check_pde(config, grid, cache=cache))
        elif suite == "tau-id":
            reports.append(check_tau_identity(config, grid, cache=cache))
        elif suite == "asym":
            asym_grid = default_grid(config, s_extent=max(s_list) + 0.5, **overrides)
            reports.extend(check_asymptotics(config, asym_grid, s_list, branch_flip))
    return reports
