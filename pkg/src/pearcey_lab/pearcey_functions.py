"""Pearcey-type special functions Q and P, their derivatives and asymptotics.

Q is an oscillatory moment integral over the imaginary axis,

    Q(s) = (1/2i*pi) Int_{iR} exp(-mu^4/4 + tau*mu^2/2 + s*mu) dmu,

and P is its four-ray companion on Sigma,

    P(s) = (1/2i*pi) Int_{Sigma} exp(mu^4/4 - tau*mu^2/2 - s*mu) dmu.

They solve the third-order equations Q''' - tau Q' = s Q and
P''' - tau P' = -s P.  Derivatives in s are computed by moment integrals
(powers of mu under the integral sign), never by finite differences, so the
differential equations hold up to pure quadrature error.

Both functions use a fixed orientation convention - the imaginary axis
upward and every diagonal ray of Sigma traversed with increasing imaginary
part - under which Q and P are real, even in s, and positive at the origin:
Q(0,0) = Gamma(1/4)/(pi 4^(3/4)) and P(0,0) = sqrt(2) Gamma(1/4)/(pi 4^(3/4)).
An operator grid may carry a different traversal of Sigma (the orientation
that makes the interval kernel a point-process intensity); the evaluators
reweight per node so the function values never depend on that choice.  The
two P-conventions differ by the exponentially small right-saddle integral,
below every tolerance used in the large-s comparisons.

The grid's conjugation symmetry makes the discrete values real to machine
precision, with the imaginary parts retained for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PrecisionLossError
from .operators import theta
from .quadrature import IMAG_AXIS, SIGMA_MINUS, SIGMA_PLUS, Grid

_TWO_PI_I = 2j * np.pi

#: Tolerated relative imaginary part of a nominally real evaluation.
_REALNESS_TOL = 1e-10
#: Tail values above this fraction of the result scale mean the truncation
#: radius is too small for the requested (s, tau).
_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class PearceyEval:
    """Values of Q or P and derivatives 0..max_order at one point (s, tau)."""

    s: float
    tau: float
    values: np.ndarray

    def __post_init__(self):
        bad = np.abs(self.values.imag) > _REALNESS_TOL * (1.0 + np.abs(self.values.real))
        if np.any(bad):
            worst = np.max(np.abs(self.values.imag))
            raise PrecisionLossError(
                f"evaluation at (s={self.s}, tau={self.tau}) lost realness "
                f"(max imaginary part {worst:.3e})"
            )

    @property
    def real_values(self) -> np.ndarray:
        return self.values.real

    def order(self, d: int) -> float:
        return float(self.values[d].real)


@dataclass(frozen=True)
class SaddleSet:
    """The three roots of mu^3 - tau*mu - s = 0, in cube-root-formula order."""

    mu: np.ndarray
    s: float
    tau: float


def _canonical_weights(grid, mask):
    """Grid weights re-signed to the fixed upward traversal of every ray."""
    canonical = np.sign(grid.nodes[mask].imag).astype(np.int8)
    return grid.weights[mask] * (canonical * grid.outward[mask])


def _moment_eval(s, tau, grid, max_order, which):
    if not (0 <= max_order <= 3):
        raise ValueError("max_order must lie in 0..3")
    if which == "Q":
        mask = grid.imag_mask
        mu = grid.nodes[mask]
        expo = -theta(mu, s, tau)
        powers = mu
    else:
        mask = grid.sigma_mask
        mu = grid.nodes[mask]
        expo = theta(mu, s, tau)
        powers = -mu
    if not np.any(mask):
        raise ValueError(f"grid has no nodes for the {which} contour")
    w = _canonical_weights(grid, mask)
    base = np.exp(expo)
    vals = np.empty(max_order + 1, dtype=complex)
    mono = np.ones_like(mu)
    for d in range(max_order + 1):
        vals[d] = np.sum(w * mono * base) / _TWO_PI_I
        mono = mono * powers

    # Tail estimate: the integrand (incl. highest moment) at the outermost nodes.
    r = np.abs(mu)
    edge = r >= 0.98 * r.max()
    tail = float(np.max(np.abs(base[edge]) * (1.0 + r[edge]) ** max_order))
    scale = float(np.max(np.abs(vals)))
    if tail > _TAIL_TOL * (1.0 + scale):
        raise PrecisionLossError(
            f"integrand tail {tail:.3e} too large at truncation for "
            f"(s={s}, tau={tau}); rebuild the grid with a larger radius"
        )
    return PearceyEval(s=float(s), tau=float(tau), values=vals)


def pearcey_Q(s: float, tau: float, grid: Grid, max_order: int = 3) -> PearceyEval:
    """Q and its s-derivatives up to ``max_order`` by moment integrals on iR."""
    return _moment_eval(s, tau, grid, max_order, "Q")


def pearcey_P(s: float, tau: float, grid: Grid, max_order: int = 3) -> PearceyEval:
    """P and its s-derivatives up to ``max_order`` by moment integrals on Sigma."""
    return _moment_eval(s, tau, grid, max_order, "P")


def ode_residual(ev: PearceyEval, which: str) -> float:
    """Relative defect of the third-order equation for a 0..3 evaluation.

    Q-branch: |Q''' - tau Q' - s Q| / (1 + |s Q|);
    P-branch: |P''' - tau P' + s P| / (1 + |s P|).
    """
    if len(ev.values) < 4:
        raise ValueError("ode_residual needs derivative orders 0..3")
    v = ev.real_values
    if which == "Q":
        res = v[3] - ev.tau * v[1] - ev.s * v[0]
    elif which == "P":
        res = v[3] - ev.tau * v[1] + ev.s * v[0]
    else:
        raise ValueError("which must be 'Q' or 'P'")
    return abs(res) / (1.0 + abs(ev.s * v[0]))


def saddle_points(s: float, tau: float) -> SaddleSet:
    """Roots of mu^3 - tau*mu - s via the cube-root formula.

    mu_k = j^k u + j^{-k} v with j = exp(2i*pi/3), u^3 and v^3 the two values
    (s +- sqrt(s^2 - 4 tau^3/27))/2.  The cube root of v^3 is picked among
    the three candidates so that u*v = tau/3 (the pairing the formula
    requires); near the discriminant zero, where that pairing degenerates,
    a generic cubic solver takes over.
    """
    s = float(s)
    tau = float(tau)
    disc = complex(s * s - 4.0 * tau**3 / 27.0)
    half = 0.5 * (s + np.sqrt(disc))
    other = 0.5 * (s - np.sqrt(disc))
    j = np.exp(2j * np.pi / 3.0)

    scale = (1.0 + abs(s) + abs(tau)) ** 1.5
    if abs(disc) < 1e-12 * scale**2 or abs(half) < 1e-14 * scale:
        mu = np.roots([1.0, 0.0, -tau, -s]).astype(complex)
        mu = mu[np.argsort(-mu.real)]  # deterministic order in the fallback
        return SaddleSet(mu=mu, s=s, tau=tau)

    u = half ** (1.0 / 3.0)
    target = tau / 3.0
    candidates = other ** (1.0 / 3.0) * j ** np.arange(3)
    v = candidates[np.argmin(np.abs(u * candidates - target))]

    ks = np.arange(3)
    mu = j**ks * u + j ** (-ks) * v
    residual = np.max(np.abs(mu**3 - tau * mu - s))
    if residual > 1e-10 * scale:
        mu = np.roots([1.0, 0.0, -tau, -s]).astype(complex)
        mu = mu[np.argsort(-mu.real)]
    return SaddleSet(mu=mu, s=s, tau=tau)


def phase(s: float, tau: float) -> float:
    """Oscillatory phase shared by the large-s forms of Q and P."""
    sin23 = math.sin(2.0 * math.pi / 3.0)
    return 0.75 * sin23 * s ** (4.0 / 3.0) - 0.5 * tau * sin23 * s ** (2.0 / 3.0) - math.pi / 6.0


def envelope(s: float, tau: float, which: str) -> float:
    """Non-oscillatory amplitude of the large-s form (Q decays, P grows)."""
    if s <= 0:
        raise ValueError("asymptotic envelope needs s > 0")
    expo = 0.375 * s ** (4.0 / 3.0) + 0.25 * tau * s ** (2.0 / 3.0) - tau**2 / 6.0
    if which == "Q":
        expo = -expo
    elif which != "P":
        raise ValueError("which must be 'Q' or 'P'")
    return math.sqrt(2.0 / (3.0 * math.pi)) * s ** (-1.0 / 3.0) * math.exp(expo)


def asymptotic(s: float, tau: float, which: str) -> float:
    """Leading large-s approximation of Q or P (envelope times cosine)."""
    return envelope(s, tau, which) * math.cos(phase(s, tau))
