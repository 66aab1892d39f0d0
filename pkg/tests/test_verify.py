import math

import numpy as np
import pytest

import anisograph.verify as V
from anisograph import (
    EllipticIntegrand,
    GraphFunction,
    HalfDomain,
    SolveConfig,
    Tag,
    build_mesh,
    compute_geometry,
)
from conftest import solve_capillary_flat, solve_curved


FLAT_CHECKS = (
    V.check_boundary_tangency,
    V.check_wall_condition,
    V.check_interior_minimality,
    V.check_wall_principal_direction,
    V.check_subharmonicity,
)


def test_flat_solution_residuals_at_rounding_level():
    integrand, mesh, u, _ = solve_capillary_flat(math.pi / 3, 1 / 16)
    # re-solve tighter so curvature fits see a machine-exact affine graph
    from anisograph import solve

    data = mesh.vertices @ np.array([-1.0 / math.tan(math.pi / 3), 0.0])
    u, rep = solve(integrand, mesh, data, SolveConfig(tol_residual=1e-13))
    geom = compute_geometry(integrand, u)
    for check in FLAT_CHECKS:
        report = check(geom)
        assert report.status == "pass"
        assert report.worst_residual <= 1e-10, report.check_name
    identity = V.check_area_element_identity(geom)
    assert identity.status == "pass" and identity.worst_residual <= 1e-12


def test_check_report_invariant():
    rep = V.CheckReport("x", "pass", 0.5, 1.0)
    assert rep.to_json_dict()["tolerance"] == 1.0
    with pytest.raises(ValueError):
        V.CheckReport("x", "maybe", 0.0, None)


def test_curved_checks_shrink_under_refinement(curved_32, curved_64):
    for check in (V.check_boundary_tangency, V.check_wall_condition,
                  V.check_interior_minimality, V.check_first_variation):
        coarse = check(curved_32[3]).worst_residual
        fine = check(curved_64[3]).worst_residual
        assert fine <= 0.75 * coarse, check.__name__


def test_subharmonicity_quadratic_term_nonnegative(curved_32):
    rep = V.check_subharmonicity(curved_32[3])
    assert rep.metadata["quad_min"] >= -1e-15
    assert rep.status == "pass"


def test_subharmonicity_flat_slack_zero(capillary_flat):
    rep = V.check_subharmonicity(capillary_flat[3])
    assert abs(rep.metadata["min_slack"]) <= 1e-12


# -- gradient estimate ---------------------------------------------------------


def test_gradient_records_basic(curved_32):
    geom = curved_32[3]
    recs = V.gradient_estimate_records(geom, [[0.0, 0.0], [0.5, 0.0]], [0.1, 0.2, 0.4])
    assert all(r.osc >= 0.0 for r in recs)
    assert all(r.r > 0 for r in recs)
    assert len(recs) == 6


def test_gradient_records_skip_out_of_domain(curved_32):
    geom = curved_32[3]
    with pytest.warns(UserWarning):
        recs = V.gradient_estimate_records(geom, [[0.9, 0.4]], [0.5])
    assert recs == []


def test_fit_satisfies_all_records(curved_32):
    geom = curved_32[3]
    recs, (c1, c2), report = V.gradient_estimate_probe(
        geom, [[0.0, 0.0], [0.25, 0.0], [0.5, 0.0]], [0.1, 0.2, 0.3, 0.45]
    )
    assert c1 >= 0.0 and c2 >= 0.0 and math.isfinite(c1) and math.isfinite(c2)
    for rec in recs:
        assert rec.lhs <= c1 + c2 * rec.osc_over_r + 1e-9
    assert report.status == "informational"
    assert report.metadata["in_sample_satisfaction"] == 1.0


def test_fit_affine_case_reduces_to_log_slope():
    # flat capillary solution: gradient is constant, oscillation positive
    integrand, mesh, u, _ = solve_capillary_flat(math.pi / 6, 1 / 16)
    geom = compute_geometry(integrand, u)
    # grid-aligned radii below x0_1: the half-ball sees the full linear growth
    recs = V.gradient_estimate_records(geom, [[0.5, 0.0]], [0.125, 0.25])
    slope = 1.0 / math.tan(math.pi / 6)
    for rec in recs:
        assert rec.lhs == pytest.approx(math.log(slope), abs=1e-6)
        assert rec.osc_over_r == pytest.approx(slope, rel=0.05)
    c1, c2 = V.fit_gradient_constants(recs)
    # the fitted bound covers the records and is attained with c2 = 0 allowed
    for rec in recs:
        assert rec.lhs <= c1 + c2 * rec.osc_over_r + 1e-12


def test_bound_tightens_with_radius_once_oscillation_saturates():
    # past r = x0_1 the half-ball holds the whole rise of the tilted graph,
    # so osc is constant, osc/r strictly decays, and the bound tightens
    integrand, mesh, u, _ = solve_capillary_flat(math.pi / 6, 1 / 16)
    geom = compute_geometry(integrand, u)
    recs = V.gradient_estimate_records(geom, [[0.25, 0.0]], [0.3, 0.4, 0.5])
    qs = [r.osc_over_r for r in recs]
    assert qs[0] > qs[1] > qs[2]
    c1, c2 = V.fit_gradient_constants(recs)
    bounds = [math.exp(c1 + c2 * q) for q in qs]
    assert bounds[0] >= bounds[1] >= bounds[2]


def test_holdout_satisfaction_bounds():
    recs = [V.GradientEstimateRecord((0.0, 0.0), 1.0, 0.0, 1.0, 1.0)]
    assert V.holdout_satisfaction((0.0, 0.0), recs) == 1.0
    bad = [V.GradientEstimateRecord((0.0, 0.0), 1.0, 5.0, 0.0, 0.0)]
    assert V.holdout_satisfaction((0.0, 0.0), bad) == 0.0


# -- Liouville probe ---------------------------------------------------------------


def test_liouville_zero_perturbation_is_exactly_flat():
    rep = V.liouville_probe(EllipticIntegrand.euclidean(3), beta=0.0,
                            r_sizes=[4.0, 8.0], bump_height=0.0)
    assert rep.status == "pass"
    assert max(rep.metadata["deviations"]) <= 1e-10


def test_liouville_decay_euclidean():
    rep = V.liouville_probe(EllipticIntegrand.euclidean(3), beta=0.1,
                            r_sizes=[4.0, 8.0], resolution=0.5)
    d = rep.metadata["deviations"]
    assert d[1] < d[0]
    assert rep.metadata["hypothesis_ok"]


def test_liouville_aborts_on_nonconvergence():
    rep = V.liouville_probe(EllipticIntegrand.euclidean(3), beta=0.1,
                            r_sizes=[4.0, 8.0], config=SolveConfig(max_iter=1))
    assert rep.status == "fail"
    assert "diagnostic" in rep.metadata


def test_liouville_validates_sizes():
    with pytest.raises(ValueError):
        V.liouville_probe(EllipticIntegrand.euclidean(3), beta=0.0, r_sizes=[8.0, 4.0])
    with pytest.raises(ValueError):
        V.liouville_probe(EllipticIntegrand.euclidean(3), beta=-1.0, r_sizes=[4.0, 8.0])


# -- graph-ball probes ----------------------------------------------------------------


def test_area_growth_flat_interior_and_wall(flat_horizontal):
    geom = flat_horizontal[3]
    radii = [0.2, 0.3, 0.45, 0.6, 0.8]
    interior = V.area_growth_check(geom, [1.0, 0.0], radii)
    assert interior.status == "pass"
    assert interior.metadata["fitted_exponent"] == pytest.approx(2.0, abs=0.05)
    # full discs: measure / r^2 close to pi
    assert interior.metadata["c_upper"] == pytest.approx(math.pi, rel=0.05)
    wall = V.area_growth_check(geom, [0.0, 0.0], radii)
    assert wall.metadata["fitted_exponent"] == pytest.approx(2.0, abs=0.05)
    assert wall.metadata["c_upper"] == pytest.approx(math.pi / 2.0, rel=0.05)


def test_area_growth_tilted_plane(flat_horizontal):
    integrand, mesh, _, _ = flat_horizontal
    u = GraphFunction(mesh, mesh.vertices @ np.array([0.0, 1.0]))
    geom = compute_geometry(integrand, u)
    rep = V.area_growth_check(geom, [1.0, 0.0], [0.2, 0.3, 0.45, 0.6])
    # a 2-plane cuts a ball in a disc of the full radius regardless of tilt
    assert rep.metadata["fitted_exponent"] == pytest.approx(2.0, abs=0.1)
    assert rep.metadata["c_upper"] == pytest.approx(math.pi, rel=0.1)


def test_area_growth_needs_three_radii(flat_horizontal):
    rep = V.area_growth_check(flat_horizontal[3], [1.0, 0.0], [0.2, 0.4])
    assert rep.status == "informational"


def test_mean_value_flat_ratio_one(capillary_flat):
    rep = V.mean_value_probe(capillary_flat[3], [0.4, 0.0], 0.35)
    assert rep.metadata["ratio"] == pytest.approx(1.0, abs=1e-9)


def test_mean_value_zero_over_zero_guard(flat_horizontal):
    # Euclidean flat graph: log W_f vanishes identically
    rep = V.mean_value_probe(flat_horizontal[3], [1.0, 0.0], 0.5)
    assert rep.metadata["ratio"] == 1.0


def test_mean_value_curved_bounded(curved_32):
    rep = V.mean_value_probe(curved_32[3], [0.4, 0.0], 0.4)
    assert rep.metadata["ratio"] <= 10.0


def test_mean_value_small_radius_skipped(flat_horizontal):
    rep = V.mean_value_probe(flat_horizontal[3], [1.0, 0.0], 1e-4)
    assert "skipped" in rep.metadata


# -- functional inequality diagnostics ---------------------------------------------


def test_bank_is_admissible_and_deterministic(curved_32):
    mesh = curved_32[1]
    bank_a = V.test_function_bank(mesh, seed=5, size=55)
    bank_b = V.test_function_bank(mesh, seed=5, size=55)
    assert len(bank_a) >= 50
    for pa, pb in zip(bank_a, bank_b):
        np.testing.assert_array_equal(pa, pb)
        assert pa.min() >= 0.0
        assert np.all(pa[mesh.vertex_tags == Tag.DIRICHLET] == 0.0)


def test_diagnostics_flat_hat_anchor(flat_horizontal):
    # single wall hat: trace ratio has the closed form 2 / (2 + sqrt(2))
    integrand, mesh, u, geom = flat_horizontal
    v = int(np.argmin(np.linalg.norm(mesh.vertices - [0.0, 0.31], axis=1)))
    phi = np.zeros(mesh.num_vertices)
    phi[v] = 1.0
    rep = V.functional_inequality_diagnostics(geom, bank=[phi])
    assert rep.metadata["trace_ratio_max"] == pytest.approx(2.0 / (2.0 + math.sqrt(2.0)),
                                                            abs=1e-12)
    assert rep.metadata["stability_ratio_max"] == 0.0


def test_diagnostics_interior_hat_sobolev_anchor(flat_horizontal):
    integrand, mesh, u, geom = flat_horizontal
    v = int(np.argmin(np.linalg.norm(mesh.vertices - [1.0, 0.0], axis=1)))
    phi = np.zeros(mesh.num_vertices)
    phi[v] = 1.0
    rep = V.functional_inequality_diagnostics(geom, bank=[phi], radius_fractions=(0.5,))
    h = mesh.h
    scale = min(mesh.domain.extents())
    r = 0.5 * scale
    expect = math.sqrt(h * h / 5.0) / (h * h / 2.0 / r + r * 4.0)
    assert rep.metadata["sobolev_ratio_max"] == pytest.approx(expect, rel=1e-12)
    assert rep.metadata["trace_ratio_max"] == 0.0


def test_diagnostics_rejects_unsupported_bank(curved_32):
    mesh = curved_32[1]
    with pytest.raises(ValueError):
        V.functional_inequality_diagnostics(curved_32[3],
                                            bank=[np.ones(mesh.num_vertices)])


def test_diagnostics_ratios_finite_on_curved(curved_32):
    rep = V.functional_inequality_diagnostics(curved_32[3], seed=3, bank_size=50)
    meta = rep.metadata
    for key in ("trace_ratio_max", "stability_ratio_max", "sobolev_ratio_max"):
        assert math.isfinite(meta[key])
        assert meta[key] >= 0.0


def test_diagnostics_stability_under_refinement(curved_32, curved_64):
    a = V.functional_inequality_diagnostics(curved_32[3], seed=9, bank_size=40).metadata
    b = V.functional_inequality_diagnostics(curved_64[3], seed=9, bank_size=40).metadata
    for key in ("trace_ratio_max", "sobolev_ratio_max"):
        assert abs(a[key] - b[key]) <= 0.3 * max(a[key], b[key])
