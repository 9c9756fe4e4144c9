import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigma2graph import barriers, geometry
from sigma2graph.errors import DomainError
from sigma2graph.grid import GridFunction


def cos_data(amp=0.3):
    return barriers.SphereFunction.from_callable(lambda y: amp * y[..., 0], 2)


@pytest.fixture(scope="module")
def cos_pair():
    f = cos_data()
    return f, barriers.treibergs_barriers(f, 1.2, 0.8)


@pytest.fixture(scope="module")
def aids():
    return barriers.epsilon_shifted_envelopes(cos_data(), 1.2, 0.8, 2.0)


# --- hyperboloids -------------------------------------------------------------

def test_unit_hyperboloid_for_unit_pinching():
    b = barriers.hyperboloid_for_pinching(1.0, 2)
    assert b.alpha == 1.0
    x = np.array([[0.0, 0.0], [3.0, 4.0]])
    np.testing.assert_allclose(b(x), [1.0, np.sqrt(26.0)])


def test_three_dim_pinching_three_gives_unit_axis():
    assert barriers.hyperboloid_for_pinching(3.0, 3).alpha == pytest.approx(1.0)


@pytest.mark.parametrize("h", [0.0, -1.0])
def test_nonpositive_pinching_rejected(h):
    with pytest.raises(DomainError):
        barriers.hyperboloid_for_pinching(h, 2)


def test_sampled_sigma2_equals_pinching():
    b = barriers.hyperboloid_for_pinching(1.7, 2)
    x = np.random.default_rng(0).uniform(-5, 5, size=(100, 2))
    s2 = geometry.h2(b.gradient(x), b.hessian(x))
    np.testing.assert_allclose(s2, 1.7, rtol=1e-10)


@given(st.integers(2, 4), st.floats(0.2, 5.0), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-3, 3), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_hyperboloid_sigma2_exact_property(n, h, s0, s1, lift, seed):
    shift = np.zeros(n)
    shift[:2] = s0, s1
    b = barriers.Hyperboloid(barriers.pinching_alpha(h, n), n, shift, lift)
    x = np.random.default_rng(seed).uniform(-4, 4, size=(10, n))
    grad = b.gradient(x)
    assert np.all(np.sum(grad**2, axis=-1) < 1)
    np.testing.assert_allclose(geometry.h2(grad, b.hessian(x)), h, rtol=1e-9)
    np.testing.assert_allclose(b.sigma2, h, rtol=1e-12)


# --- sphere data and envelopes ---------------------------------------------

def test_modulus_bounds_taylor_remainder():
    f = cos_data()
    y, v, g = f.points[::7], f.values[::7], f.grads[::7]
    lhs = np.abs(v[None, :] - v[:, None] - np.sum(g[:, None, :] * (y[None, :, :] - y[:, None, :]), -1))
    dist2 = np.sum((y[None, :, :] - y[:, None, :]) ** 2, axis=-1)
    assert np.all(lhs <= f.curvature_modulus * dist2 + 1e-12)


def test_constant_data_collapses_to_one_hyperboloid():
    f = barriers.SphereFunction.from_callable(lambda y: np.full(y.shape[:-1], 0.4), 2)
    assert f.curvature_modulus == pytest.approx(0.0, abs=1e-8)
    q1 = barriers.treibergs_envelope(f, 1.2, 0.8, "lower")
    x = np.random.default_rng(1).uniform(-6, 6, size=(50, 2))
    a1 = barriers.pinching_alpha(1.2, 2)
    np.testing.assert_allclose(q1(x), 0.4 + np.sqrt(a1**2 + np.sum(x * x, -1)), atol=1e-6)


def test_envelope_preconditions():
    f = cos_data()
    with pytest.raises(DomainError):
        barriers.treibergs_envelope(f, 0.8, 1.2, "lower")
    with pytest.raises(DomainError):
        barriers.sphere_samples(2, 0)


def test_envelopes_ordered_and_bound_members(cos_pair):
    f, bp = cos_pair
    g = np.linspace(-10, 10, 50)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    q1, q2 = bp.lower(X), bp.upper(X)
    assert np.all(q1 < q2)
    assert np.all(bp.lower.members(X) <= q1[:, None] + 1e-12)
    assert np.all(bp.upper.members(X) >= q2[:, None] - 1e-12)


def test_lower_envelope_convex_along_lines(cos_pair):
    _, bp = cos_pair
    rng = np.random.default_rng(2)
    x = rng.uniform(-6, 6, size=(200, 2))
    d = rng.normal(size=(200, 2))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    s = 0.05
    second = bp.lower(x + s * d) - 2 * bp.lower(x) + bp.lower(x - s * d)
    assert np.min(second) >= -1e-9


@pytest.mark.parametrize("kind", ["lower", "upper"])
def test_envelope_asymptotic_residual_decays(cos_pair, kind):
    f, bp = cos_pair
    q = getattr(bp, kind)
    dirs = barriers.sphere_samples(2, 32)
    res = [np.max(np.abs(q(r * dirs) - r - f.value(dirs))) for r in (10.0, 20.0, 50.0)]
    assert res[0] > res[1] > res[2]


def test_envelope_slope_below_one(cos_pair):
    _, bp = cos_pair
    for q in (bp.lower, bp.upper):
        g = GridFunction.box(6.0, 0.25, 2)
        g.values = q(g.points())
        assert barriers.discrete_slope(g) < 1.0


# --- mollifier ------------------------------------------------------------------

def test_mollify_preserves_affine_functions():
    g = GridFunction.box(2.0, 0.0625, 2)
    pts = g.points()
    g.values = 0.3 * pts[..., 0] - 0.5 * pts[..., 1] + 1.0
    m = barriers.mollify(g, 0.25)
    mp = m.points()
    np.testing.assert_allclose(m.values, 0.3 * mp[..., 0] - 0.5 * mp[..., 1] + 1.0, atol=1e-13)


def test_mollify_rejects_small_radius():
    g = GridFunction.box(1.0, 0.125, 2, fill=0.0)
    with pytest.raises(DomainError):
        barriers.mollify(g, 0.2)


def test_bump_has_unit_mass_and_compact_support():
    k, m = barriers.bump_kernel(0.3, 0.05, 2)
    assert k.sum() == pytest.approx(1.0)
    assert k.shape == (2 * m + 1,) * 2
    assert np.all(k >= 0)


def test_mollified_envelope_slope_and_deviation(cos_pair):
    _, bp = cos_pair
    g = GridFunction.box(4.0, 0.025, 2)
    g.values = bp.lower(g.points())
    beta = 0.1
    m = barriers.mollify(g, beta)
    L = barriers.discrete_slope(g)
    assert barriers.discrete_slope(m) <= L + 1e-12
    orig = g.interpolate(m.points())
    assert np.max(np.abs(m.values - orig)) <= L * beta


# --- auxiliary functions ----------------------------------------------------------

def test_lightcone_aid_separation():
    phi1 = barriers.hyperboloid_for_pinching(1.0, 2)
    phi2 = barriers.hyperboloid_for_pinching(0.8, 2)
    psi, delta, R1 = barriers.lightcone_aid(phi1, 2.0, phi2)
    g = GridFunction.box(2.0, 0.05, 2)
    pts = g.points()
    inside = np.linalg.norm(pts, axis=-1) <= 2.0
    assert np.all(psi(pts[inside]) <= phi1(pts[inside]) - delta)
    ring = R1 * 1.01 * barriers.sphere_samples(2, 64)
    far = 50.0 * barriers.sphere_samples(2, 64)
    assert np.all(psi(ring) > phi2(ring)) and np.all(psi(far) > phi2(far))


def test_gradient_aid_separations(aids, cos_pair):
    ga, _ = aids
    _, bp = cos_pair
    pts = ga.psi.points()
    rad = np.linalg.norm(pts, axis=-1)
    inner, ring = rad <= ga.R0, (rad >= ga.R1) & (rad <= ga.R2)
    assert np.all(ga.psi.values[inner] <= bp.lower(pts[inner]) - ga.delta)
    assert np.all(ga.psi.values[ring] > bp.upper(pts[ring]))
    assert 0 < ga.theta < 1


def test_convex_aid_is_strictly_convex_and_separates(aids, cos_pair):
    _, ca = aids
    _, bp = cos_pair
    _, hess = ca.psi.derivatives()
    assert np.min(np.linalg.eigvalsh(hess)) > 0
    pts = ca.psi.points()
    rad = np.linalg.norm(pts, axis=-1)
    inner, ring = rad <= ca.R0, (rad >= ca.R1) & (rad <= ca.R2)
    assert np.all(ca.psi.values[inner] >= bp.upper(pts[inner]) + 1.0)
    assert np.all(ca.psi.values[ring] < bp.lower(pts[ring]))
    assert ca.theta > 0


# --- serialization -----------------------------------------------------------------

def test_hyperboloid_text_round_trip():
    b = barriers.Hyperboloid(1.3, 3, np.array([0.1, -0.2, 0.3]), 0.25)
    back = barriers.barrier_from_text(barriers.barrier_to_text(b))
    x = np.random.default_rng(3).normal(size=(20, 3))
    np.testing.assert_array_equal(back(x), b(x))


def test_envelope_text_round_trip(cos_pair):
    _, bp = cos_pair
    back = barriers.barrier_from_text(barriers.barrier_to_text(bp.lower))
    x = np.random.default_rng(4).uniform(-5, 5, size=(40, 2))
    np.testing.assert_allclose(back(x), bp.lower(x), atol=1e-8)
