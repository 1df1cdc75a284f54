import json

import numpy as np
import pytest

from pearcey_lab import (
    GridDegeneracyError,
    ModelConfig,
    PrecisionLossError,
    UnderResolvedError,
    assemble_K,
    default_grid,
    det_one_minus_K,
    dressing_vectors,
    genfun,
    genfun_via_KP,
    kernel_KP,
    kernel_KP_matrix,
    theta,
)
from pearcey_lab.operators import DetResult, _genfun_complex_k
from pearcey_lab.quadrature import _legendre_rule
from reference_values import KERNEL_KP


# --- configuration validation -------------------------------------------


def test_config_accepts_standard(std_config):
    assert std_config.n_thresholds == 2
    assert np.allclose(std_config.dk, [0.5, -0.5])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(a=(0.0,), k=(0.0, 0.0), tau=0.0, s=0.0),                 # N < 2
        dict(a=(1.0, 0.0), k=(0.0, 0.5, 0.0), tau=0.0, s=0.0),        # not increasing
        dict(a=(0.0, 1.0), k=(0.1, 0.5, 0.0), tau=0.0, s=0.0),        # k0 != 0
        dict(a=(0.0, 1.0), k=(0.0, 0.5, 0.2), tau=0.0, s=0.0),        # kN != 0
        dict(a=(0.0, 1.0), k=(0.0, 1.5, 0.0), tau=0.0, s=0.0),        # k out of range
        dict(a=(0.0, 1.0), k=(0.0, 0.5), tau=0.0, s=0.0),             # wrong length
        dict(a=(0.0, 1.0), k=(0.0, 0.0, 0.0), tau=0.0, s=0.0),        # degenerate
        dict(a=(0.0, 1.0), k=(0.0, 0.5, 0.0), tau=np.nan, s=0.0),     # non-finite
    ],
)
def test_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        ModelConfig(**kwargs)


def test_degenerate_allowed_in_test_mode(degenerate_config):
    assert np.allclose(degenerate_config.dk, 0.0)


def test_config_json_round_trip(n3_config):
    data = json.loads(json.dumps(n3_config.to_json_dict()))
    assert ModelConfig.from_json_dict(data) == n3_config
    assert n3_config.config_hash() == ModelConfig.from_json_dict(data).config_hash()


def test_theta_definition():
    mu = 1.3 + 0.4j
    assert theta(mu, 0.7, 0.2) == pytest.approx(mu**4 / 4 - 0.1 * mu**2 - 0.7 * mu)


# --- dressed vectors ------------------------------------------------------


def test_dressing_supports(std_config, std_grid):
    d = dressing_vectors(std_config, std_grid)
    sig = std_grid.sigma_mask
    imag = std_grid.imag_mask
    assert np.all(d.f_vals[0, imag] == 0) and np.any(d.f_vals[0, sig] != 0)
    assert np.all(d.f_vals[1:, sig] == 0) and np.any(d.f_vals[1:, imag] != 0)
    assert np.all(d.g_vals[0, sig] == 0) and np.any(d.g_vals[0, imag] != 0)
    assert np.all(d.g_vals[1:, imag] == 0)


def test_dressing_zero_weights(degenerate_config, std_grid):
    d = dressing_vectors(degenerate_config, std_grid)
    assert np.all(d.f_vals[1:] == 0)
    assert np.all(d.g_vals[1:] == 0)


def test_numerator_telescopes_at_crossing(std_config, std_grid):
    # f~^T(mu) g~(nu) -> 0 as mu (imag axis) and nu (Sigma) approach 0
    d = dressing_vectors(std_config, std_grid)
    imag_idx = np.flatnonzero(std_grid.imag_mask)
    sig_idx = np.flatnonzero(std_grid.sigma_mask)
    i = imag_idx[np.argmin(np.abs(std_grid.nodes[imag_idx]))]
    j = sig_idx[np.argmin(np.abs(std_grid.nodes[sig_idx]))]
    numer = d.f_vals[:, i] @ d.g_vals[:, j]
    dist = abs(std_grid.nodes[i]) + abs(std_grid.nodes[j])
    assert abs(numer) <= 5.0 * dist


def test_exponent_overflow_guard(std_config):
    big = default_grid(std_config, truncation=12.0)
    with pytest.raises(PrecisionLossError):
        dressing_vectors(std_config, big)


# --- operator matrix -------------------------------------------------------


def test_diagonal_is_exactly_zero(std_config, std_grid):
    m = assemble_K(std_config, std_grid)
    assert np.all(np.diag(m.entries) == 0)


def test_same_contour_blocks_vanish(std_config, std_grid):
    m = assemble_K(std_config, std_grid)
    sig = std_grid.sigma_mask
    imag = std_grid.imag_mask
    assert np.all(m.entries[np.ix_(sig, sig)] == 0)
    assert np.all(m.entries[np.ix_(imag, imag)] == 0)


def test_degenerate_operator_is_nilpotent(degenerate_config, std_grid):
    m = assemble_K(degenerate_config, std_grid)
    sq = m.entries @ m.entries
    assert np.max(np.abs(sq)) == 0.0
    res = det_one_minus_K(m)
    assert abs(res.value - 1.0) <= 1e-10


def test_entries_linear_in_weight_increments(std_grid):
    base = ModelConfig((-1.0, 1.0), (0.0, 0.2, 0.0), 1.0, 0.0)
    double = ModelConfig((-1.0, 1.0), (0.0, 0.4, 0.0), 1.0, 0.0)
    m1 = assemble_K(base, std_grid).entries
    m2 = assemble_K(double, std_grid).entries
    sig = std_grid.sigma_mask
    imag = std_grid.imag_mask
    cross = np.ix_(imag, sig)          # weight-bearing block scales linearly
    mask = np.abs(m1[cross]) > 1e-300
    assert np.allclose(m2[cross][mask] / m1[cross][mask], 2.0)
    anchor = np.ix_(sig, imag)         # weight-free block unchanged
    assert np.array_equal(m1[anchor], m2[anchor])


def test_near_origin_entries_bounded(std_config):
    for overrides in ({}, {"nodes_per_panel": 24}):
        grid = default_grid(std_config, **overrides)
        m = assemble_K(std_config, grid)
        assert np.max(np.abs(m.entries)) < 10.0


def test_coincident_nodes_raise(std_config, std_grid):
    from dataclasses import replace

    nodes = std_grid.nodes.copy()
    nodes[1] = nodes[0]
    broken = replace(std_grid, nodes=nodes)
    broken.__dict__.pop("sigma_mask", None)
    broken.__dict__.pop("imag_mask", None)
    with pytest.raises(GridDegeneracyError):
        assemble_K(std_config, broken)


# --- determinants ----------------------------------------------------------


def test_det_zero_matrix(std_config, std_grid):
    from pearcey_lab.operators import OperatorMatrix

    m = OperatorMatrix(np.zeros((8, 8), dtype=complex), std_grid, std_config)
    res = det_one_minus_K(m)
    assert res == DetResult(1.0, 0.0, 0.0)


def test_genfun_all_zero_weights(degenerate_config, std_grid):
    assert genfun(degenerate_config, std_grid) == pytest.approx(1.0, abs=1e-10)


def test_genfun_monotone_in_k(std_grid):
    lo = ModelConfig((-1.0, 1.0), (0.0, 0.3, 0.0), 1.0, 0.0)
    hi = ModelConfig((-1.0, 1.0), (0.0, 0.6, 0.0), 1.0, 0.0)
    assert genfun(hi, std_grid) < genfun(lo, std_grid)


def test_genfun_in_unit_interval(battery, battery_caches):
    for cfg in battery:
        grid, _ = battery_caches[cfg]
        f = genfun(cfg, grid)
        assert 0.0 < f <= 1.0


def test_nonpositive_determinant_raises(std_config, std_grid):
    from pearcey_lab.operators import OperatorMatrix

    m = OperatorMatrix(2.0 * np.eye(3, dtype=complex), std_grid, std_config)
    with pytest.raises(UnderResolvedError):
        det_one_minus_K(m)


# --- Pearcey kernel and the interval route ---------------------------------


@pytest.mark.parametrize("point, expected", sorted(KERNEL_KP.items()))
def test_kernel_against_frozen_oracle(point, expected):
    x, y, tau = point
    cfg = ModelConfig((-1.0, 1.0), (0.0, 0.5, 0.0), tau, 0.0)
    grid = default_grid(cfg)
    assert kernel_KP(x, y, cfg, grid) == pytest.approx(expected, abs=1e-8)


def test_kernel_diagonal_nonnegative(std_config, std_grid):
    for x in np.linspace(-2, 2, 17):
        assert kernel_KP(x, x, std_config, std_grid) >= 0.0


def test_kernel_diagonal_even(std_config, std_grid):
    for x in (0.4, 1.1, 1.9):
        plus = kernel_KP(x, x, std_config, std_grid)
        minus = kernel_KP(-x, -x, std_config, std_grid)
        assert plus == pytest.approx(minus, rel=1e-10)


def test_kernel_refinement_stable(std_config, std_grid):
    fine = default_grid(std_config, panels_per_ray=16, nodes_per_panel=20,
                        grading=0.15, min_panel=1e-8, max_panel=0.8)
    v1 = kernel_KP(0.3, -0.7, std_config, std_grid)
    v2 = kernel_KP(0.3, -0.7, std_config, fine)
    assert abs(v1 - v2) <= 1e-8


def test_kernel_insensitive_to_panel_count(std_config):
    vals = [kernel_KP(0.3, -0.7, std_config, default_grid(std_config, panels_per_ray=p))
            for p in (12, 16)]
    assert abs(vals[0] - vals[1]) <= 1e-9


def test_kernel_matrix_matches_scalar(std_config, std_grid):
    xs = np.array([-0.4, 0.2, 0.9])
    km = kernel_KP_matrix(xs, std_config, std_grid)
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            assert km[i, j] == pytest.approx(kernel_KP(x, y, std_config, std_grid), rel=1e-12)


def test_genfun_via_KP_zero_weights(degenerate_config, std_grid):
    assert genfun_via_KP(degenerate_config, std_grid) == pytest.approx(1.0, abs=1e-12)


def test_dual_route_standard(std_config, std_grid):
    f1 = genfun(std_config, std_grid)
    f2 = genfun_via_KP(std_config, std_grid)
    assert abs(f1 - f2) / f1 <= 1e-5


def test_dual_route_three_thresholds(n3_config, battery_caches):
    grid, _ = battery_caches[n3_config]
    f1 = genfun(n3_config, grid)
    f2 = genfun_via_KP(n3_config, grid)
    assert abs(f1 - f2) / f1 <= 1e-4


def test_small_weight_trace_expansion(std_config, std_grid):
    # F = 1 - k1 * Int K_P(x, x) dx + O(k1^2)
    k1 = 1e-3
    tiny = ModelConfig(std_config.a, (0.0, k1, 0.0), std_config.tau, std_config.s)
    f = genfun(tiny, std_grid)
    x, w = _legendre_rule(64)
    diag = kernel_KP_matrix(x, std_config, std_grid).diagonal()
    trace = np.sum(w * diag)
    assert abs(f - (1.0 - k1 * trace)) <= 1e-6


def test_complex_weight_determinant_is_analytic_probe(std_config, std_grid):
    # entire in the increments: value at conjugate weights is the conjugate
    z = 0.8 + 0.3j
    plus = _genfun_complex_k(std_config, np.array([0.0, z, 0.0]), std_grid)
    minus = _genfun_complex_k(std_config, np.array([0.0, np.conj(z), 0.0]), std_grid)
    assert plus == pytest.approx(np.conj(minus), rel=1e-12)


def test_via_KP_rejects_bad_node_count(std_config, std_grid):
    with pytest.raises(ValueError):
        genfun_via_KP(std_config, std_grid, nodes_per_interval=1)
