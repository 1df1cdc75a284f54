import numpy as np
import pytest

from pearcey_lab import (
    CostGuardError,
    FDScheme,
    ModelConfig,
    PointCache,
    check_asymptotics,
    check_delta_s,
    check_heat,
    check_logF_delta,
    check_ode3,
    check_pde,
    check_tau_identity,
    check_tw_formula,
    default_grid,
    fd_coefficients,
    fd_derivative,
    genfun,
    occupancy,
    occupancy_table,
    run_suite,
)


# --- finite differences ----------------------------------------------------


def test_fd_coefficients_width7_order4():
    offsets, coeffs = fd_coefficients(4, 7)
    assert np.array_equal(offsets, np.arange(-3, 4))
    assert np.allclose(coeffs, np.array([-1, 12, -39, 56, -39, 12, -1]) / 6.0)


@pytest.mark.parametrize("order,width", [(1, 5), (2, 5), (3, 7), (4, 7)])
def test_fd_polynomial_exactness(order, width):
    # centered rules are exact for polynomials up to the stencil degree
    coeffs = np.arange(1.0, width)
    poly = np.polynomial.Polynomial(coeffs)
    scheme = FDScheme(step=5e-2, order=order, width=width, richardson=0)
    got = fd_derivative(poly, 0.3, scheme)
    assert got == pytest.approx(poly.deriv(order)(0.3), rel=1e-8, abs=1e-8)


def test_fd_named_examples():
    assert fd_derivative(np.exp, 0.0, FDScheme(1e-2, 1, 5, 0)) == pytest.approx(1.0, abs=1e-9)
    assert fd_derivative(lambda s: s**4, 0.0, FDScheme(1e-2, 4, 5, 0)) == pytest.approx(24.0, abs=1e-6)
    assert fd_derivative(lambda s: 3.7, 0.0, FDScheme(1e-2, 1, 5, 1)) == pytest.approx(0.0, abs=1e-12)


def test_fd_vector_valued():
    f = lambda s: np.array([np.sin(s), np.cos(s)])
    got = fd_derivative(f, 0.4, FDScheme(1e-2, 1, 5, 1))
    assert np.allclose(got, [np.cos(0.4), -np.sin(0.4)], atol=1e-10)


def test_fd_nonfinite_propagates():
    got = fd_derivative(lambda s: np.nan, 0.0, FDScheme(1e-2, 1, 5, 0))
    assert np.isnan(got)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(step=1e-5, order=1, width=5, richardson=0),
        dict(step=0.5, order=1, width=5, richardson=0),
        dict(step=1e-2, order=5, width=7, richardson=0),
        dict(step=1e-2, order=1, width=9, richardson=0),
        dict(step=1e-2, order=4, width=5, richardson=3),
        dict(step=1e-2, order=4, width=3, richardson=0),
    ],
)
def test_fd_scheme_validation(kwargs):
    with pytest.raises(ValueError):
        FDScheme(**kwargs)


def test_richardson_improves_smooth_case():
    exact = np.cos(0.3)
    errs = [abs(fd_derivative(np.sin, 0.3, FDScheme(5e-2, 1, 5, r)) - exact)
            for r in (0, 1)]
    assert errs[1] < errs[0]


# --- identity checks --------------------------------------------------------


def test_logF_delta(std_config, std_grid, std_cache):
    rep = check_logF_delta(std_config, std_grid, cache=std_cache)
    assert rep.passed and rep.relative <= 1e-5


def test_logF_delta_fd_order(std_config, std_grid, std_cache):
    # truncation-dominated regime: quartic error decay under halving
    r1 = check_logF_delta(std_config, std_grid,
                          FDScheme(4e-2, 1, 5, 0), std_cache)
    r2 = check_logF_delta(std_config, std_grid,
                          FDScheme(2e-2, 1, 5, 0), std_cache)
    assert r2.residual <= 0.3 * r1.residual or r2.residual < 1e-12


def test_tw_formula(std_config, std_grid, std_cache):
    rep = check_tw_formula(std_config, std_grid, cache=std_cache)
    assert rep.passed and rep.relative <= 1e-4


def test_delta_s(std_config, std_grid, std_cache):
    rep = check_delta_s(std_config, std_grid, cache=std_cache)
    assert rep.passed and rep.relative <= 1e-5


def test_ode3(std_config, std_grid, std_cache):
    rows = check_ode3(std_config, std_grid, cache=std_cache)
    assert [r.identity for r in rows] == ["ode3_p", "ode3_q"]
    assert all(r.passed and r.relative <= 1e-3 for r in rows)


def test_ode3_richardson_helps(std_config, std_grid, std_cache):
    coarse = check_ode3(std_config, std_grid, FDScheme(2e-2, 3, 7, 0), std_cache)
    extrap = check_ode3(std_config, std_grid, FDScheme(2e-2, 3, 7, 1), std_cache)
    assert extrap[0].residual < coarse[0].residual


def test_heat(std_config, std_grid, std_cache):
    rows = check_heat(std_config, std_grid, cache=std_cache)
    assert all(r.passed and r.relative <= 1e-3 for r in rows)


def test_pde(std_config, std_grid, std_cache):
    rep = check_pde(std_config, std_grid, cache=std_cache)
    assert rep.passed and rep.relative <= 1e-3


def test_tau_identity(std_config, std_grid, std_cache):
    rep = check_tau_identity(std_config, std_grid, cache=std_cache)
    assert rep.passed and rep.relative <= 1e-3


def test_tau_identity_bracket_antisymmetry():
    rng = np.random.default_rng(11)
    p, q, dp, dq = (rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(4))
    forward = p @ dq - dp @ q
    swapped = q @ dp - dq @ p
    assert forward == pytest.approx(-swapped)


def test_degenerate_residuals_are_zero(degenerate_config):
    grid = default_grid(degenerate_config, s_extent=0.2, tau_extent=0.1,
                        panels_per_ray=8, nodes_per_panel=10, min_panel=1e-4)
    cache = PointCache(degenerate_config, grid)
    reports = [
        check_logF_delta(degenerate_config, grid, cache=cache),
        check_tw_formula(degenerate_config, grid, cache=cache),
        check_delta_s(degenerate_config, grid, cache=cache),
        *check_ode3(degenerate_config, grid, cache=cache),
        *check_heat(degenerate_config, grid, cache=cache),
        check_pde(degenerate_config, grid, cache=cache),
        check_tau_identity(degenerate_config, grid, cache=cache),
    ]
    for rep in reports:
        assert rep.residual <= 1e-12, rep


def test_report_fields(std_config, std_grid, std_cache):
    rep = check_tw_formula(std_config, std_grid, cache=std_cache)
    data = rep.to_json_dict()
    assert data["identity"] == "tw_formula"
    assert data["config_hash"] == std_config.config_hash()
    assert data["relative"] == rep.residual / rep.scale
    assert np.isfinite(data["relative"]) and data["scale"] > 0


# --- asymptotic matching -----------------------------------------------------


def test_asymptotics_rows_and_convergence(std_config):
    grid = default_grid(std_config, s_extent=8.5)
    rows = check_asymptotics(std_config, grid, [4.0, 6.0, 8.0])
    assert len(rows) == 12  # 2 components x {q, p} x 3 shifts
    by_series = {}
    for r in rows:
        by_series.setdefault(r.identity, []).append(r.residual)
    # the q comparisons and the outer p component decay across the sweep;
    # p1 is contaminated by the larger neighbouring envelope at these shifts
    # (see the acceptance suite for the literal per-step criterion)
    for name in ("asym_q1", "asym_q2", "asym_p2"):
        series = by_series[name]
        assert series[-1] < series[0]
    q2 = by_series["asym_q2"]
    assert all(b < a for a, b in zip(q2[:-1], q2[1:]))


def test_asymptotics_zero_component_passes(std_grid, degenerate_config):
    grid = default_grid(degenerate_config, s_extent=8.5)
    rows = check_asymptotics(degenerate_config, grid, [4.0, 6.0])
    assert all(r.passed for r in rows)
    assert all(r.residual == 0 for r in rows)


def test_asymptotics_input_validation(std_config, std_grid):
    with pytest.raises(ValueError):
        check_asymptotics(std_config, std_grid, [6.0, 4.0])
    with pytest.raises(ValueError):
        check_asymptotics(std_config, std_grid, [2.0, 4.0])


def test_asymptotics_branch_flip_invariant(std_config):
    grid = default_grid(std_config, s_extent=6.5)
    plain = check_asymptotics(std_config, grid, [4.0, 6.0], branch_flip=False)
    flipped = check_asymptotics(std_config, grid, [4.0, 6.0], branch_flip=True)
    for a, b in zip(plain, flipped):
        assert a.residual == pytest.approx(b.residual, rel=1e-9)


# --- occupancy ----------------------------------------------------------------


def test_occupancy_zero_is_gap_probability(std_config, std_grid):
    gap_cfg = ModelConfig(std_config.a, (0.0, 1.0, 0.0), std_config.tau, std_config.s)
    gap = genfun(gap_cfg, std_grid)
    assert occupancy(std_config, [0], grid=std_grid) == pytest.approx(gap, abs=1e-8)


def test_occupancy_normalization(std_config, std_grid):
    table = occupancy_table(std_config, 12, grid=std_grid)
    assert abs(table.sum() - 1.0) <= 1e-4
    assert np.all(table >= -1e-6) and np.all(table <= 1 + 1e-6)


def test_occupancy_partial_sums_monotone(std_config, std_grid):
    table = occupancy_table(std_config, 12, grid=std_grid)
    partial = np.cumsum(table)
    assert np.all(np.diff(partial) >= -1e-12)
    assert partial[-1] == pytest.approx(1.0, abs=1e-4)


def test_occupancy_two_intervals(n3_config):
    # determinant-level quantities are resolution-robust; a light grid keeps
    # the 16^2 circle evaluations cheap
    grid = default_grid(n3_config, panels_per_ray=8, nodes_per_panel=10, min_panel=1e-4)
    table = occupancy_table(n3_config, 6, nodes=16, grid=grid)
    assert table.shape == (7, 7)
    assert np.all(table >= -1e-6)
    assert table.sum() == pytest.approx(1.0, abs=1e-3)
    single = occupancy(n3_config, [1, 0], nodes=16, grid=grid)
    assert single == pytest.approx(table[1, 0], abs=1e-12)


def test_occupancy_guards(std_config, std_grid):
    wide = ModelConfig((-2.0, -1.0, 0.0, 1.0, 2.0),
                       (0.0, 0.2, 0.4, 0.6, 0.8, 0.0)[:6], 1.0, 0.0)
    with pytest.raises(CostGuardError):
        occupancy_table(wide, 2)
    with pytest.raises(ValueError):
        occupancy_table(std_config, 2, rho=1.5, grid=std_grid)
    with pytest.raises(ValueError):
        occupancy_table(std_config, 40, nodes=32, grid=std_grid)
    with pytest.raises(ValueError):
        occupancy(std_config, [1, 2], grid=std_grid)
    with pytest.raises(ValueError):
        occupancy(std_config, [-1], grid=std_grid)


# --- suite driver ---------------------------------------------------------------


def test_run_suite_delta(std_config):
    reports = run_suite(std_config, ["delta"])
    assert {r.identity for r in reports} == {"logF_delta", "delta_s"}
    assert all(r.passed for r in reports)


def test_run_suite_unknown(std_config):
    with pytest.raises(ValueError):
        run_suite(std_config, ["nope"])
