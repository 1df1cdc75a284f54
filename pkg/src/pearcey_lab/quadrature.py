"""Oriented contours and composite Gauss-Legendre quadrature.

The integral operators of this package live on three oriented curves that
cross at the origin:

* ``imag_axis``:   the imaginary axis, traversed from -iR to +iR;
* ``sigma_plus``:  the right-hand pair of diagonal rays (angles -pi/4, +pi/4),
  entering the origin along +pi/4 and leaving along -pi/4;
* ``sigma_minus``: the left-hand pair (angles -3pi/4, +3pi/4), entering
  along -3pi/4 and leaving along +3pi/4.

The diagonal angles are forced by convergence: exp(mu^4/4) decays exactly
when Re(mu^4) < 0, i.e. on the four rays at +-pi/4 and +-3pi/4.  The arrow
directions cannot be recovered from the determinant identities alone (those
are orientation-covariant: reversing a curve changes both determinant routes
consistently).  They are pinned by the probabilistic content instead: with
the default above - the right pair traversed downward, the left pair upward -
the interval kernel has an even, non-negative diagonal (a point-process
intensity), the generating function lies in (0, 1] and decreases in every
weight, and the occupancy-number extraction returns probabilities.
Reversing the whole diagonal cross yields exactly minus that kernel, which
the positivity checks reject at once.  ``flip_sigma_minus`` reverses the
left-hand curve alone for such diagnostic runs.

The special functions Q and P are evaluated with a fixed convention of their
own (see ``pearcey_functions``), so their values do not depend on how an
operator grid happens to be oriented; ``Grid.outward`` records the traversal
direction per node to make that reweighting possible.

Every ray is split into panels graded geometrically toward the origin and
each panel carries a Gauss-Legendre rule, so no node ever sits at the
crossing point.  Weights are complex and include the traversal direction:
``sum(w * f(z))`` approximates the oriented contour integral of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .errors import GridDegeneracyError

SIGMA_PLUS = "sigma_plus"
SIGMA_MINUS = "sigma_minus"
IMAG_AXIS = "imag_axis"
CONTOUR_TAGS = (SIGMA_PLUS, SIGMA_MINUS, IMAG_AXIS)

# Angles owned by each curve (radians, in (-pi, pi]).
_TAG_ANGLES = {
    SIGMA_PLUS: (-np.pi / 4, np.pi / 4),
    SIGMA_MINUS: (-3 * np.pi / 4, 3 * np.pi / 4),
    IMAG_AXIS: (-np.pi / 2, np.pi / 2),
}

#: Default resolution.  12 geometric panels per ray at 16 nodes each.  The
#: bare Cauchy kernel 1/(u - v) contributes a corner defect proportional to
#: the innermost panel length; grading ratio 0.2 pushes that panel to ~1e-7,
#: which keeps pointwise kernel values stable to ~2e-9 under refinement
#: (determinant-level quantities are insensitive to the corner altogether).
#: Panels longer than ``max_panel`` are subdivided so the oscillatory phases
#: exp(i s r / sqrt(2)), exp(i tau r^2 / 2) stay inside the Gauss-Legendre
#: resolution.
DEFAULT_PANELS_PER_RAY = 12
DEFAULT_NODES_PER_PANEL = 16
DEFAULT_GRADING = 0.2
DEFAULT_MIN_PANEL = 1e-7
DEFAULT_MAX_PANEL = 1.5


@dataclass(frozen=True)
class Ray:
    """One straight ray of a contour.

    ``orientation`` is +1 when the ray is traversed outward from the origin
    and -1 when traversed inward; ``truncation`` is the radius R at which the
    ray is cut.
    """

    angle: float
    orientation: int
    truncation: float
    tag: str

    def __post_init__(self):
        if not (-np.pi < self.angle <= np.pi):
            raise ValueError(f"ray angle {self.angle} outside (-pi, pi]")
        if self.orientation not in (-1, 1):
            raise ValueError("ray orientation must be +1 (outward) or -1 (inward)")
        if not (self.truncation > 0 and math.isfinite(self.truncation)):
            raise ValueError("ray truncation must be a positive finite radius")
        if self.tag not in CONTOUR_TAGS:
            raise ValueError(f"unknown contour tag {self.tag!r}")


@dataclass(frozen=True)
class ContourSpec:
    """Full description of the discretization of Sigma and the imaginary axis."""

    rays: tuple[Ray, ...]
    panels_per_ray: int = DEFAULT_PANELS_PER_RAY
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL
    grading: float = DEFAULT_GRADING
    min_panel: float = DEFAULT_MIN_PANEL
    max_panel: float = DEFAULT_MAX_PANEL

    def __post_init__(self):
        if self.panels_per_ray < 1 or self.nodes_per_panel < 1:
            raise ValueError("panels_per_ray and nodes_per_panel must be positive")
        if not (0 < self.grading < 1):
            raise ValueError("grading must be a geometric ratio in (0, 1)")
        if not (0 < self.min_panel < self.max_panel):
            raise ValueError("need 0 < min_panel < max_panel")
        for tag in CONTOUR_TAGS:
            rays = [r for r in self.rays if r.tag == tag]
            if not rays:
                continue
            angles = sorted(r.angle for r in rays)
            expected = sorted(_TAG_ANGLES[tag])
            if len(rays) != 2 or not np.allclose(angles, expected):
                raise ValueError(
                    f"{tag} must consist of two rays at angles {expected}"
                )
            if sorted(r.orientation for r in rays) != [-1, 1]:
                raise ValueError(
                    f"{tag} must be a single oriented curve: one inward and "
                    "one outward ray"
                )

    def to_json_dict(self) -> dict:
        return {
            "rays": [
                {
                    "angle": r.angle,
                    "orientation": r.orientation,
                    "truncation": r.truncation,
                    "tag": r.tag,
                }
                for r in self.rays
            ],
            "panels_per_ray": self.panels_per_ray,
            "nodes_per_panel": self.nodes_per_panel,
            "grading": self.grading,
            "min_panel": self.min_panel,
            "max_panel": self.max_panel,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ContourSpec":
        rays = tuple(
            Ray(d["angle"], int(d["orientation"]), d["truncation"], d["tag"])
            for d in data["rays"]
        )
        return cls(
            rays=rays,
            panels_per_ray=int(data["panels_per_ray"]),
            nodes_per_panel=int(data["nodes_per_panel"]),
            grading=float(data["grading"]),
            min_panel=float(data.get("min_panel", DEFAULT_MIN_PANEL)),
            max_panel=float(data.get("max_panel", DEFAULT_MAX_PANEL)),
        )


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature nodes with complex direction-bearing weights.

    ``tags`` labels each node with the curve it belongs to and ``outward``
    records the traversal direction (+1 away from the origin) used when the
    weight was built.  ``panel_edges`` keeps the oriented endpoints of every
    straight panel (used by the weight-sum invariant); panel p owns the
    ``nodes_per_panel`` consecutive nodes starting at ``p * nodes_per_panel``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    tags: np.ndarray
    outward: np.ndarray
    panel_edges: np.ndarray
    nodes_per_panel: int

    def __post_init__(self):
        if not (len(self.nodes) == len(self.weights) == len(self.tags) == len(self.outward)):
            raise ValueError("nodes, weights, tags and outward must have equal length")
        if np.any(self.nodes == 0):
            raise ValueError("quadrature node at the contour crossing point")

    def __len__(self) -> int:
        return len(self.nodes)

    def mask(self, *tags: str) -> np.ndarray:
        m = np.zeros(len(self.nodes), dtype=bool)
        for tag in tags:
            m |= self.tags == tag
        return m

    @cached_property
    def sigma_mask(self) -> np.ndarray:
        return self.mask(SIGMA_PLUS, SIGMA_MINUS)

    @cached_property
    def imag_mask(self) -> np.ndarray:
        return self.mask(IMAG_AXIS)

    @cached_property
    def cauchy_imag_sigma(self) -> np.ndarray:
        """1/(lambda - mu) for lambda on the imaginary axis, mu on Sigma.

        Shared by every Pearcey-kernel evaluation on this grid.
        """
        lam = self.nodes[self.imag_mask]
        mu = self.nodes[self.sigma_mask]
        return 1.0 / (lam[:, None] - mu[None, :])


def truncation_radius(tau: float, s_max: float, target_eps: float) -> float:
    """Smallest radius R >= 6 at which every integrand tail is below target_eps.

    The dressed exponentials decay like exp(-(r^4/8 - |s_max| r - |tau| r^2/2))
    along the contours, so R solves r^4/8 - |s_max| r - |tau| r^2/2 >= -log(eps).
    """
    for name, val in (("tau", tau), ("s_max", s_max), ("target_eps", target_eps)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val}")
    if not (0 < target_eps < 1):
        raise ValueError("target_eps must lie in (0, 1)")

    budget = -math.log(target_eps)

    def gap(r):
        return r**4 / 8 - abs(tau) * r**2 / 2 - abs(s_max) * r - budget

    hi = 8.0
    while gap(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise ValueError("no finite truncation radius (inputs too large)")
    root = brentq(gap, 0.0, hi)
    return max(float(root), 6.0)


def build_contours(
    tau: float,
    s_max: float,
    target_eps: float,
    *,
    panels_per_ray: int = DEFAULT_PANELS_PER_RAY,
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL,
    grading: float = DEFAULT_GRADING,
    min_panel: float = DEFAULT_MIN_PANEL,
    max_panel: float = DEFAULT_MAX_PANEL,
    truncation: float | None = None,
    flip_sigma_minus: bool = False,
) -> ContourSpec:
    """Contour specification adequate for shifts up to |s_max| at parameter tau."""
    radius = truncation_radius(tau, s_max, target_eps) if truncation is None else float(truncation)
    if not (radius > 0 and math.isfinite(radius)):
        raise ValueError("truncation override must be positive and finite")

    # Cap the panel length so the fastest phase (|tau| r^2 / 2 on the
    # diagonals, |s_max| y on the axis) stays within ~10 radians per panel,
    # which 16-node Gauss-Legendre resolves far below 1e-12.
    phase_rate = abs(tau) * radius + abs(s_max) + 1.0
    max_panel = min(max_panel, 10.0 / phase_rate)

    lo, hi = -1, 1
    if flip_sigma_minus:
        lo, hi = 1, -1
    rays = (
        Ray(np.pi / 4, -1, radius, SIGMA_PLUS),
        Ray(-np.pi / 4, 1, radius, SIGMA_PLUS),
        Ray(-3 * np.pi / 4, lo, radius, SIGMA_MINUS),
        Ray(3 * np.pi / 4, hi, radius, SIGMA_MINUS),
        Ray(-np.pi / 2, -1, radius, IMAG_AXIS),
        Ray(np.pi / 2, 1, radius, IMAG_AXIS),
    )
    return ContourSpec(
        rays=rays,
        panels_per_ray=panels_per_ray,
        nodes_per_panel=nodes_per_panel,
        grading=grading,
        min_panel=min_panel,
        max_panel=max_panel,
    )


@lru_cache(maxsize=16)
def _legendre_rule(n: int):
    x, w = roots_legendre(n)
    return x, w


def _panel_breakpoints(
    radius: float, panels: int, grading: float, min_panel: float, max_panel: float
) -> np.ndarray:
    """Radial breakpoints 0 = t_0 < ... < R, graded toward the origin.

    Geometric grading resolves the corner at 0; intervals longer than
    ``max_panel`` are split evenly so oscillatory integrands stay resolved
    far from the origin.
    """
    t = radius * grading ** np.arange(panels - 1, -1, -1, dtype=float)
    t = t[t >= min_panel]          # grade until the floor, then stop splitting
    if len(t) == 0:
        t = np.array([radius])
    t = np.concatenate(([0.0], t))
    if np.any(np.diff(t) <= 0):
        raise ValueError("min_panel too large for the requested grading")
    refined = [0.0]
    for lo, hi in zip(t[:-1], t[1:]):
        pieces = max(1, math.ceil((hi - lo) / max_panel))
        refined.extend(lo + (hi - lo) * np.arange(1, pieces + 1) / pieces)
    return np.asarray(refined)


def _gauss_panel(z_a: complex, z_b: complex, n: int):
    x, w = _legendre_rule(n)
    mid = 0.5 * (z_a + z_b)
    half = 0.5 * (z_b - z_a)
    return mid + half * x, half * w


def discretize(spec: ContourSpec) -> Grid:
    """Composite Gauss-Legendre grid for a contour specification.

    Deterministic for a fixed spec.  Panels follow the traversal order of
    each ray, so nodes appear in the order the contour is walked.
    """
    nodes, weights, tags, outward, edges = [], [], [], [], []
    for ray in spec.rays:
        t = _panel_breakpoints(
            ray.truncation, spec.panels_per_ray, spec.grading, spec.min_panel, spec.max_panel
        )
        direction = np.exp(1j * ray.angle)
        spans = list(zip(t[:-1], t[1:]))
        if ray.orientation < 0:
            spans = [(b, a) for a, b in reversed(spans)]
        for r_a, r_b in spans:
            z_a, z_b = r_a * direction, r_b * direction
            z, w = _gauss_panel(z_a, z_b, spec.nodes_per_panel)
            nodes.append(z)
            weights.append(w)
            tags.append(np.full(len(z), ray.tag))
            outward.append(np.full(len(z), ray.orientation, dtype=np.int8))
            edges.append((z_a, z_b))
    return Grid(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        tags=np.concatenate(tags),
        outward=np.concatenate(outward),
        panel_edges=np.array(edges, dtype=complex),
        nodes_per_panel=spec.nodes_per_panel,
    )


def polyline_grid(vertices, nodes_per_panel: int, tag: str = IMAG_AXIS) -> Grid:
    """Gauss-Legendre grid along the straight segments joining ``vertices``.

    Utility for self-tests of weight signs (e.g. discrete residue checks on
    closed rectangles).  The tag is cosmetic.
    """
    vertices = np.asarray(vertices, dtype=complex)
    if len(vertices) < 2:
        raise ValueError("need at least two vertices")
    nodes, weights, edges = [], [], []
    for z_a, z_b in zip(vertices[:-1], vertices[1:]):
        z, w = _gauss_panel(z_a, z_b, nodes_per_panel)
        nodes.append(z)
        weights.append(w)
        edges.append((z_a, z_b))
    n = np.concatenate(nodes)
    return Grid(
        nodes=n,
        weights=np.concatenate(weights),
        tags=np.full(len(n), tag),
        outward=np.ones(len(n), dtype=np.int8),
        panel_edges=np.array(edges, dtype=complex),
        nodes_per_panel=nodes_per_panel,
    )


def integrate(grid: Grid, values, tags=None) -> complex:
    """Oriented contour integral sum(values * weights) over selected tags."""
    values = np.asarray(values)
    if values.shape[0] != len(grid.nodes):
        raise ValueError(
            f"values length {values.shape[0]} does not match grid size {len(grid.nodes)}"
        )
    if tags is None:
        return complex(np.sum(values * grid.weights))
    if isinstance(tags, str):
        tags = (tags,)
    m = grid.mask(*tags)
    return complex(np.sum(values[m] * grid.weights[m]))


def check_panel_sums(grid: Grid, rtol: float = 1e-13) -> float:
    """Max relative defect of sum(weights) = endpoint - startpoint per panel."""
    n = grid.nodes_per_panel
    worst = 0.0
    for p, (z_a, z_b) in enumerate(grid.panel_edges):
        w = grid.weights[p * n : (p + 1) * n]
        expected = z_b - z_a
        defect = abs(w.sum() - expected) / max(abs(expected), 1e-300)
        worst = max(worst, defect)
    if worst > rtol:
        raise GridDegeneracyError(f"panel weight sums off by {worst:.3e}")
    return worst
