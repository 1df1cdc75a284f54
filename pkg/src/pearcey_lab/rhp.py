"""Residue data of the Riemann-Hilbert problem and the explicit Lax blocks.

The solution of the (N+1)x(N+1) Riemann-Hilbert problem attached to the
integrable operator expands at infinity as I + Gamma_1/mu + O(mu^-2) with

    Gamma_1 = [[-delta, p^T],
               [   q,   Delta]].

Gamma_1 is computed from resolvent data, not from an analytic continuation:
with F~ = (1 - K)^{-1} f~ one has Gamma_1 = Int F~(mu) g~(mu)^T dmu, which the
Nystrom discretization turns into one factorization plus N+1 solves.  Since
det(Gamma) == 1, the matrix satisfies Tr(Gamma_1) = 0 and delta = Tr(Delta);
those identities are asserted at every extraction and double as an
under-resolution detector.

The s- and mu-flows of the gauge-transformed problem have polynomial
coefficient matrices whose k-dependent blocks are explicit in p, q and their
s-derivatives; ``lax_A`` and ``lax_B_blocks`` assemble them.  The mu-flow
also carries constant (k-independent) terms B3~ = -A1, B1~ = tau*A1 and
B0~ = s*A1 + diag combination of the thresholds; they are provided on the
returned object for completeness.  The coefficients C_1, C_0 of the tau-flow
have no closed form at this level and are not assembled; the tau-dependence
is verified through the coupled heat equation instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import PrecisionLossError, UnderResolvedError
from .operators import ModelConfig, assemble_K, dressing_vectors
from .quadrature import Grid


@dataclass(frozen=True, eq=False)
class Gamma1:
    """Residue block data of the Riemann-Hilbert solution at one (s, tau)."""

    delta: float
    p: np.ndarray
    q: np.ndarray
    Delta: np.ndarray
    trace_residual: float
    matrix: np.ndarray = field(repr=False)

    @property
    def pq(self) -> complex:
        """The scalar product p^T q (real up to quadrature error)."""
        return complex(self.p @ self.q)


@dataclass(frozen=True, eq=False)
class LaxBlocks:
    """Coefficient blocks of the s-flow (A part) and mu-flow (B part)."""

    A1: np.ndarray | None = None
    A0: np.ndarray | None = None
    B2_12: np.ndarray | None = None
    B2_21: np.ndarray | None = None
    B1_11: complex | None = None
    B1_12: np.ndarray | None = None
    B1_21: np.ndarray | None = None
    B1_22: np.ndarray | None = None
    B0_11: complex | None = None
    B0_12: np.ndarray | None = None
    B0_21: np.ndarray | None = None
    B0_22: np.ndarray | None = None
    D: np.ndarray | None = None
    B3_tilde: np.ndarray | None = None
    B1_tilde: np.ndarray | None = None
    B0_tilde: np.ndarray | None = None


class OperatorState:
    """One factorized Nystrom operator: determinant and resolvent from one LU.

    The log-determinant and the residue matrix Gamma_1 share the
    factorization of (I - K), which is what every finite-difference check
    evaluates repeatedly.
    """

    def __init__(self, config: ModelConfig, grid: Grid, branch_flip: bool = False):
        self.config = config
        self.grid = grid
        self.branch_flip = branch_flip
        self.dressed = dressing_vectors(config, grid, branch_flip)
        matrix = assemble_K(config, grid, branch_flip)
        self._a = np.eye(len(grid.nodes), dtype=complex) - matrix.entries
        self._lu = None

    def _factorization(self):
        if self._lu is None:
            self._lu = lu_factor(self._a)
        return self._lu

    @cached_property
    def det(self) -> complex:
        lu, piv = self._factorization()
        diag = np.diag(lu)
        swaps = int(np.sum(piv != np.arange(len(piv))))
        logabs = float(np.sum(np.log(np.abs(diag))))
        angle = float(np.sum(np.angle(diag))) + math.pi * swaps
        return complex(np.exp(logabs) * np.exp(1j * angle))

    @cached_property
    def log_F(self) -> float:
        det = self.det
        if abs(det.imag) > 1e-8 * (1.0 + abs(det.real)):
            raise PrecisionLossError(
                f"determinant imaginary leakage {abs(det.imag):.3e}"
            )
        if det.real <= 0.0:
            raise UnderResolvedError(f"determinant {det.real:.3e} <= 0")
        return math.log(det.real)

    @property
    def F(self) -> float:
        return math.exp(self.log_F)

    def resolvent_columns(self) -> np.ndarray:
        """F~ = (1 - K)^{-1} f~ at the nodes, one column per component."""
        rhs = self.dressed.f_vals.T
        return lu_solve(self._factorization(), rhs)

    def gamma1(self, check_tol: float = 1e-8) -> Gamma1:
        cols = self.resolvent_columns()
        g1 = (cols * self.grid.weights[:, None]).T @ self.dressed.g_vals.T
        return _gamma1_from_matrix(g1, check_tol)


def _gamma1_from_matrix(g1: np.ndarray, check_tol: float) -> Gamma1:
    scale = 1.0 + float(np.linalg.norm(g1))
    trace_residual = abs(np.trace(g1))
    delta_c = -g1[0, 0]
    p = g1[0, 1:].copy()
    q = g1[1:, 0].copy()
    big_delta = g1[1:, 1:].copy()
    pq = p @ q
    if check_tol is not None:
        if trace_residual > check_tol * scale:
            raise UnderResolvedError(
                f"Tr(Gamma_1) = {trace_residual:.3e} exceeds {check_tol:.1e} * {scale:.3f}"
            )
        if abs(delta_c.imag) > check_tol * (1.0 + abs(delta_c.real)):
            raise UnderResolvedError(f"delta has imaginary part {delta_c.imag:.3e}")
        if abs(pq.imag) > check_tol * (1.0 + abs(pq.real)):
            raise UnderResolvedError(f"p^T q has imaginary part {pq.imag:.3e}")
    return Gamma1(
        delta=float(delta_c.real),
        p=p,
        q=q,
        Delta=big_delta,
        trace_residual=float(trace_residual),
        matrix=g1,
    )


def resolvent_columns(config: ModelConfig, grid: Grid, branch_flip: bool = False) -> np.ndarray:
    """Solve (I - K diag(w)) X = f~ componentwise; X approximates F~ at the nodes."""
    return OperatorState(config, grid, branch_flip).resolvent_columns()


def gamma1(
    config: ModelConfig,
    grid: Grid,
    branch_flip: bool = False,
    check_tol: float = 1e-8,
) -> Gamma1:
    """Residue matrix Gamma_1 = Int F~ g~^T dmu, block-decomposed and validated."""
    return OperatorState(config, grid, branch_flip).gamma1(check_tol)


def lax_A(g1: Gamma1, n: int) -> LaxBlocks:
    """Coefficients of the linear s-flow: A(mu) = mu A1 + A0."""
    if len(g1.p) != n:
        raise ValueError(f"Gamma_1 data has size {len(g1.p)}, expected N = {n}")
    a1 = np.diag(np.concatenate(([-n], np.ones(n)))) / (n + 1)
    a0 = np.zeros((n + 1, n + 1), dtype=complex)
    a0[0, 1:] = g1.p
    a0[1:, 0] = -g1.q
    return LaxBlocks(A1=a1, A0=a0)


def lax_B_blocks(p, q, dp, dq, d2p, d2q, config: ModelConfig) -> LaxBlocks:
    """Closed-form k-dependent blocks of the cubic mu-flow coefficient.

    Inputs are p, q and their first two s-derivatives (the derivatives come
    from finite differences of the residue data; there is no independent
    route to them).
    """
    p, q = np.asarray(p), np.asarray(q)
    dp, dq = np.asarray(dp), np.asarray(dq)
    d2p, d2q = np.asarray(d2p), np.asarray(d2q)
    n = config.n_thresholds
    if not (len(p) == len(q) == len(dp) == len(dq) == len(d2p) == len(d2q) == n):
        raise ValueError("p, q and derivatives must all have length N")
    tau = config.tau
    pq = p @ q
    d_diag = np.asarray(config.a) + config.s

    a1 = np.diag(np.concatenate(([-n], np.ones(n)))) / (n + 1)
    b0_tilde = config.s * a1 + np.diag(
        np.concatenate(
            (
                [-np.sum(config.a)],
                [n * aj - (np.sum(config.a) - aj) for aj in config.a],
            )
        )
    ) / (n + 1)

    return LaxBlocks(
        A1=a1,
        B2_12=-p,
        B2_21=q.copy(),
        B1_11=complex(pq),
        B1_12=dp.copy(),
        B1_21=dq.copy(),
        B1_22=-np.outer(q, p),
        B0_11=complex(p @ dq - dp @ q),
        B0_12=-d2p - 2.0 * pq * p + tau * p,
        B0_21=d2q + 2.0 * pq * q - tau * q,
        B0_22=np.outer(q, dp) - np.outer(dq, p),
        D=np.diag(d_diag),
        B3_tilde=-a1,
        B1_tilde=tau * a1,
        B0_tilde=b0_tilde,
    )
