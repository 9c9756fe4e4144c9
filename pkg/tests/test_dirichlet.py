import numpy as np
import pytest

from sigma2graph import barriers, curvature, dirichlet
from sigma2graph.dirichlet import ContinuationState, SolverConfig
from sigma2graph.errors import EllipticityError, HypothesisError, SpacelikeLost
from sigma2graph.grid import GridFunction


def hyperboloid_grid(R, h, alpha=1.0):
    g = GridFunction.box(R, h, 2)
    g.values = barriers.Hyperboloid(alpha, 2)(g.points())
    return g


def state_for(u, H, t=1.0, k=0.0, v=None):
    return ContinuationState(t, k, v if v is not None else u.copy(), u.copy(), H)


@pytest.fixture(scope="module")
def unit_solution():
    H = curvature.constant(1.0)
    u, rep = dirichlet.solve_dirichlet(H, barriers.hyperboloid_barriers(1.0, 1.0), 3.0, 1 / 16)
    return u, rep


def test_hyperboloid_residual_is_truncation_error():
    H = curvature.constant(1.0)
    res = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        u = hyperboloid_grid(2.0, h)
        res.append(np.max(np.abs(dirichlet.residual(u, state_for(u, H)).values)))
    assert res[-1] < 2e-3
    for a, b in zip(res, res[1:]):
        assert 4 * 0.7 <= a / b <= 4 * 1.3


def test_residual_at_t0_ignores_frozen_iterate():
    H = curvature.pinched_sine(0.2)
    u = hyperboloid_grid(2.0, 1 / 8)
    v1 = u.with_values(u.values + 0.3)
    v2 = u.with_values(np.cos(u.values))
    r1 = dirichlet.residual(u, state_for(u, H, t=0.0, k=0.5, v=v1)).values
    r2 = dirichlet.residual(u, state_for(u, H, t=0.0, k=0.5, v=v2)).values
    np.testing.assert_array_equal(r1, r2)


def test_residual_flags_lost_spacelikeness():
    g = GridFunction.box(1.0, 0.125, 2)
    g.values = 1.5 * g.points()[..., 0]
    with pytest.raises(SpacelikeLost) as info:
        dirichlet.residual(g, state_for(g, curvature.constant(1.0)))
    assert info.value.worst_slope > 1


def test_newton_from_lower_barrier_converges(unit_solution):
    u, rep = unit_solution
    assert rep.converged and rep.residual < 1e-9
    assert rep.all_iterates_admissible
    exact = barriers.hyperboloid_for_pinching(1.0)(u.points())
    assert np.max(np.abs(u.values - exact)) < 2e-2
    assert rep.iterations <= 40


def test_step_at_discrete_solution_is_tiny(unit_solution):
    u, _ = unit_solution
    H = curvature.constant(1.0)
    state = state_for(u, H)
    new, step = dirichlet.newton_step(u, state, config=SolverConfig(), coupled=True)
    assert step.delta_norm < 1e-9
    assert np.max(np.abs(new.values - u.values)) < 1e-9


def test_non_admissible_start_raises():
    g = GridFunction.box(1.0, 0.125, 2)
    pts = g.points()
    g.values = 0.2 * (pts[..., 0] ** 2 - pts[..., 1] ** 2)
    with pytest.raises(EllipticityError):
        dirichlet.newton_step(g, state_for(g, curvature.constant(1.0)))


def test_residual_history_nonincreasing_within_stages(unit_solution):
    _, rep = unit_solution
    t = np.asarray(rep.t_history)
    r = np.asarray(rep.residual_history)
    for a, b, ta, tb in zip(r, r[1:], t, t[1:]):
        if ta == tb:
            assert b <= a


def test_sandwich_with_pinched_curvature():
    H = curvature.pinched_sine(0.2)
    bp = barriers.hyperboloid_barriers(1.2, 0.8)
    u, rep = dirichlet.solve_dirichlet(H, bp, 2.0, 1 / 16)
    tol = 10 / 16**2
    assert np.all(bp.lower(u.points()) - tol <= u.values)
    assert np.all(u.values <= bp.upper(u.points()) + tol)
    assert rep.sandwich_violations == 0


def test_barrier_check_rejects_bad_subsolution():
    with pytest.raises(HypothesisError, match="H2\\[phi1\\]"):
        dirichlet.solve_dirichlet(curvature.constant(2.0), barriers.hyperboloid_barriers(1.2, 0.8),
                                  2.0, 1 / 8)


def test_monotonization_exponent():
    g = GridFunction.box(2.0, 0.25, 2)
    pts = g.points()
    phi1 = barriers.hyperboloid_for_pinching(1.1)(pts)
    phi2 = barriers.hyperboloid_for_pinching(1.0)(pts)
    assert dirichlet.monotonization_exponent(curvature.constant(1.0), pts, phi1, phi2) == 0.0
    H = curvature.increasing_tanh(0.1)
    k = dirichlet.monotonization_exponent(H, pts, phi1, phi2)
    assert k >= np.max(H.dH_dz(pts, phi1) / H(pts, phi1)) - 1e-15
    assert k > 0


def test_zeroth_order_coefficient_nonpositive():
    H = curvature.increasing_tanh(0.1)
    u = hyperboloid_grid(1.0, 0.125, barriers.pinching_alpha(1.1, 2))
    k = 0.3
    J, zeroth = dirichlet.jacobian(u, state_for(u, H, k=k))
    inner = tuple(m - 2 for m in u.shape)
    row = (J @ np.ones(J.shape[1])).reshape(inner)
    # constants are annihilated by the derivative stencils away from the boundary ring
    assert np.all(row[1:-1, 1:-1] <= 1e-12)
    assert np.all(row[1:-1, 1:-1] < 0)
    np.testing.assert_allclose(row[1:-1, 1:-1], zeroth[1:-1, 1:-1], rtol=1e-8, atol=1e-10)


def test_two_solves_agree_for_increasing_curvature():
    H = curvature.increasing_tanh(0.1)
    bp = barriers.hyperboloid_barriers(1.1, 1.0)
    u1, _ = dirichlet.solve_dirichlet(H, bp, 2.0, 1 / 16)
    u2, _ = dirichlet.solve_dirichlet(H, bp, 2.0, 1 / 16,
                                      config=SolverConfig(schedule=(0.0, 0.5, 1.0), damping=0.8))
    assert np.max(np.abs(u1.values - u2.values)) < 1e-8


def test_harmonic_extension_reproduces_affine_data():
    g = GridFunction.box(1.0, 0.125, 2)
    pts = g.points()
    g.values = np.where(g.boundary_mask, 0.2 * pts[..., 0] - 0.1 * pts[..., 1] + 0.5, 0.0)
    ext = dirichlet.harmonic_extension(g)
    np.testing.assert_allclose(ext, 0.2 * pts[..., 0] - 0.1 * pts[..., 1] + 0.5, atol=1e-12)


def test_tilt_bounded_by_aid_estimate():
    H = curvature.pinched_sine(0.2)
    bp = barriers.hyperboloid_barriers(1.2, 0.8)
    u, _ = dirichlet.solve_dirichlet(H, bp, 3.0, 1 / 16)
    psi, _, R1 = barriers.lightcone_aid(bp.lower, 1.0, bp.upper)
    bound, _ = barriers.nu_bound_from_aid(psi, bp.upper, R1)
    assert dirichlet.nu_max_inner(u, 1.0) <= 1.1 * bound


def test_stage_tolerance_rule():
    cfg = SolverConfig()
    assert cfg.stage_tolerance(1 / 16) == pytest.approx(0.1 / 256)
    assert cfg.stage_tolerance(1e-6) == 1e-9
