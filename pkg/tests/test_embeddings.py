import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsdgeom import (
    DiscEmbedding,
    KoParams,
    MetricField,
    Mobius,
    diagonal_disc,
    disc_rank_measured,
    flow_gradient,
    geodesic_disc_through,
    ko_potential,
    ko_potential_polydisc,
    maximal_polydisc_typeI,
    parse_domain,
    product_potential,
    pullback_curvature,
    pullback_metric_1d,
    schwarz_pick_residual,
    standard_potential,
)
from bsdgeom.errors import (
    ConfigError,
    ContractError,
    DegenerateMetricError,
    DomainBoundaryError,
    InconsistentEmbeddingError,
)


def _std(domain):
    return MetricField(standard_potential(domain), domain)


def _zetas(seed, count, radius=0.9):
    r = np.random.default_rng(seed)
    return radius * np.sqrt(r.random(count)) * np.exp(2j * np.pi * r.random(count))


def test_diagonal_disc_examples():
    u = diagonal_disc(3, 2)
    np.testing.assert_array_equal(u(0.5), [0.5, 0.5, 0])
    assert u.declared_rank == 2 and u.target.descriptor == "polydisc:3"
    ident = diagonal_disc(1, 1)
    np.testing.assert_array_equal(ident(np.array([0.1j, 0.3])), [[0.1j], [0.3]])


@pytest.mark.parametrize("n, k", [(2, 0), (2, 3), (0, 1)])
def test_diagonal_disc_range(n, k):
    with pytest.raises(ContractError):
        diagonal_disc(n, k)


@pytest.mark.parametrize("n, k", [(1, 1), (3, 1), (3, 2), (4, 4)])
@pytest.mark.parametrize("K", [1.0, 2.5])
def test_diagonal_pullback_and_curvature(n, k, K):
    u = diagonal_disc(n, k, K)
    m = _std(u.target)
    zeta = _zetas(n + k, 20)
    np.testing.assert_allclose(pullback_metric_1d(u, m, zeta), 2 * k / (K * (1 - np.abs(zeta) ** 2) ** 2),
                               rtol=1e-8)
    assert u.expected_curvature() == pytest.approx(-K / k)
    np.testing.assert_allclose(pullback_curvature(u, m, zeta), -K / k, atol=1e-6)


def test_pullback_example_values():
    assert pullback_metric_1d(diagonal_disc(3, 2), _std(parse_domain("polydisc:3")), 0) == pytest.approx(4.0)
    poly = maximal_polydisc_typeI(2, 2)
    lam = pullback_metric_1d(poly.coordinate_disc(0), _std(poly.target), 0)
    assert lam == pytest.approx(4.0, abs=1e-7)


def test_pullback_guards():
    u = diagonal_disc(2, 1)
    m = _std(u.target)
    with pytest.raises(DomainBoundaryError):
        pullback_metric_1d(u, m, 0.99, margin=0.05)
    stuck = DiscEmbedding(lambda z: np.zeros(np.shape(z) + (2,), complex), u.target, (2,))
    with pytest.raises(DegenerateMetricError):
        pullback_metric_1d(stuck, m, 0.1)


def test_maximal_polydisc_typeI_shape():
    poly = maximal_polydisc_typeI(2, 3)
    assert poly.r == 2
    np.testing.assert_array_equal(poly.map([0.5, 1 / 3]).reshape(2, 3), [[0.5, 0, 0], [0, 1 / 3, 0]])
    np.testing.assert_array_equal(maximal_polydisc_typeI(1, 1).map([0.2]), [0.2])
    with pytest.raises(ContractError):
        poly.coordinate_disc(2)
    with pytest.raises(ContractError):
        maximal_polydisc_typeI(0, 2)


@pytest.mark.parametrize("p, q", [(2, 2), (2, 3), (3, 2)])
def test_maximal_polydisc_metric_is_diagonal(p, q):
    # induced coefficient 2 / (K_m (1 - |z|^2)^2) with K_m = 2K / (p + q)
    K = 1.0
    poly = maximal_polydisc_typeI(p, q, K)
    m = _std(poly.target)
    zetas = np.array([0.4, -0.2j])
    B = poly.basis
    induced = B.conj() @ m.metric(poly.map(zetas)) @ B.T
    Km = 2 * K / (p + q)
    np.testing.assert_allclose(np.diag(induced).real, 2 / (Km * (1 - np.abs(zetas) ** 2) ** 2), rtol=1e-6)
    assert abs(induced[0, 1]) < 1e-6


def test_maximal_polydisc_coordinate_curvature():
    poly = maximal_polydisc_typeI(2, 2)
    m = _std(poly.target)
    for j in range(poly.r):
        kappa = pullback_curvature(poly.coordinate_disc(j), m, np.array([0.0, 0.3 + 0.2j]))
        np.testing.assert_allclose(kappa, -2 / 4, atol=1e-3)


def test_full_rank_disc_in_typeI():
    poly = maximal_polydisc_typeI(2, 2)
    disc = poly.full_rank_disc()
    assert disc.expected_curvature() == pytest.approx(-2 / 8)
    assert pullback_curvature(disc, _std(poly.target), 0.4j) == pytest.approx(-0.25, abs=1e-3)


@pytest.mark.parametrize("n, k, K", [(3, 2, 1.0), (5, 5, 3.0), (4, 1, 0.5)])
def test_disc_rank_measured(n, k, K):
    u = diagonal_disc(n, k, K)
    assert disc_rank_measured(u, _std(u.target)) == k


def test_disc_rank_inconsistent():
    d = parse_domain("polydisc:2")
    u = DiscEmbedding(lambda z: np.stack([z, z / 2], axis=-1), d, (2, 2))
    assert pullback_metric_1d(u, _std(d), 0.0) == pytest.approx(2.5)
    with pytest.raises(InconsistentEmbeddingError):
        disc_rank_measured(u, _std(d))


def test_disc_rank_with_mixed_ricci_constants():
    Ks = (1.0, 2.0, 4.0)
    parts = [ko_potential_polydisc(1, KoParams(K=K)) for K in Ks]
    d = parse_domain("polydisc:3")
    m = MetricField(product_potential(parts), d)
    u = DiscEmbedding(lambda z: np.stack([z, 0 * z, z], axis=-1), d, (2, 2))
    # lam(0) = 2/1 + 2/4, matched by exactly the subset {K=1, K=4}
    assert disc_rank_measured(u, m, Ks) == 2
    ambiguous = [ko_potential_polydisc(1, KoParams(K=K)) for K in (1.0, 2.0, 2.0)]
    m2 = MetricField(product_potential(ambiguous), d)
    u2 = DiscEmbedding(lambda z: np.stack([z, 0 * z, 0 * z], axis=-1), d, (2,))
    with pytest.raises(InconsistentEmbeddingError):
        disc_rank_measured(u2, m2, (1.0, 2.0, 2.0))


def test_schwarz_pick_examples():
    assert schwarz_pick_residual(lambda z: z, 0.3 + 0.4j) < 1e-12
    assert schwarz_pick_residual(Mobius(0.3, 1.0), 0.2 + 0.1j) <= 1e-12
    assert schwarz_pick_residual(lambda z: z / 2, 0.0) > 0.1
    with pytest.raises(ContractError):
        schwarz_pick_residual(lambda z: z, 1.0)
    with pytest.raises(ContractError):
        Mobius(1.0)


@given(
    st.floats(0, 0.95), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi),
    st.floats(0, 0.95), st.floats(-np.pi, np.pi),
)
def test_schwarz_pick_holds_for_automorphisms(ra, arg_a, theta, rz, arg_z):
    u = Mobius(ra * np.exp(1j * arg_a), theta)
    assert schwarz_pick_residual(u, rz * np.exp(1j * arg_z)) <= 1e-10


def test_schwarz_pick_numerical_derivative():
    # no .derivative attribute: falls back to the contour-integral rule
    f = Mobius(0.5j, 0.2)
    assert schwarz_pick_residual(lambda z: f(z), 0.6) <= 1e-10


def test_flow_from_critical_point_is_constant():
    d = parse_domain("ball:2")
    res = flow_gradient(_std(d), np.zeros(2), t_max=0.5, dt=0.01)
    assert not res.escaped and len(res.times) == 51
    assert np.abs(res.points).max() == 0


def test_ko_flow_stays_on_diagonal():
    d = parse_domain("polydisc:3")
    m = MetricField(ko_potential(d), d)
    res = flow_gradient(m, np.full(3, 0.2 + 0.1j), t_max=1.0, dt=1e-2)
    spread = np.abs(res.points - res.points[:, :1]).max()
    assert spread <= 1e-8
    assert np.abs(res.points[-1] - res.points[0]).max() > 1e-2


def test_flow_escape_returns_partial_trajectory():
    d = parse_domain("ball:2")
    res = flow_gradient(_std(d), np.array([0.9, 0]), t_max=2.0, dt=1e-2)
    assert res.escaped and 0 < res.times[-1] < 2.0
    assert len(res.points) == len(res.times)


def test_flow_rejects_bad_input():
    m = _std(parse_domain("disc"))
    with pytest.raises(ContractError):
        flow_gradient(m, [0.1], dt=0)
    with pytest.raises(DomainBoundaryError):
        flow_gradient(m, [1.2])


@pytest.mark.parametrize(
    "descriptor, z, v",
    [
        ("polydisc:2", [0.3, -0.2j], [0.91, 0.96j]),
        ("ball:2", [0.3, 0.4j], [0.2, -0.5]),
        ("discxball:2", [0.5, 0.1, 0.2j], [1.0, 0.0, 0.0]),
    ],
)
def test_geodesic_disc_through_is_geodesic(descriptor, z, v):
    d = parse_domain(descriptor, 2.0)
    u, mismatch = geodesic_disc_through(d, z, v)
    m = _std(d)
    np.testing.assert_allclose(u(0.0), z, atol=1e-14)
    t = u.tangent(0.0)
    assert abs(np.vdot(t, v)) == pytest.approx(np.linalg.norm(t) * np.linalg.norm(v), rel=1e-9)
    if mismatch < 1e-6:
        kappa = pullback_curvature(u, m, np.array([0.0, 0.3j]))
        np.testing.assert_allclose(kappa, u.expected_curvature(), atol=1e-6)


def test_geodesic_disc_through_reports_mismatch():
    d = parse_domain("polydisc:2")
    _, good = geodesic_disc_through(d, [0.0, 0.0], [1.0, 1j])
    _, bad = geodesic_disc_through(d, [0.0, 0.0], [1.0, 0.7])
    assert good < 1e-12 and bad == pytest.approx(0.3)


def test_geodesic_disc_through_rejects():
    with pytest.raises(ConfigError):
        geodesic_disc_through(parse_domain("typeI:2,2"), np.zeros(4), np.ones(4))
    with pytest.raises(DegenerateMetricError):
        geodesic_disc_through(parse_domain("ball:2"), [0.1, 0.0], [0.0, 0.0])
