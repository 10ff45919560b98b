import numpy as np
import pytest
from scipy import integrate

from wgheat.mesh import build_uniform_mesh, triangle_geometry
from wgheat.weak_gradient import (
    CoefficientError,
    WeakGradient,
    interpolate_rt0,
    local_gradient_map,
    project_rt0,
    rt0_basis,
    rt0_divergence,
    rt0_mass,
    rt0_mass_matrix,
    weak_gradient_local,
)
from wgheat.wg_space import project_qh

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def collapsed_gauss(corners, m=5):
    """m*m-point Duffy-collapsed Gauss rule on a triangle (independent of the package rule)."""
    x, w = np.polynomial.legendre.leggauss(m)
    s, ws = 0.5 * (x + 1), 0.5 * w
    u, v = np.meshgrid(s, s, indexing="ij")
    W = np.outer(ws, ws) * (1 - u)
    a, b = u.ravel(), (v * (1 - u)).ravel()
    p0, p1, p2 = corners
    J = abs(cross2(p1 - p0, p2 - p0))
    pts = p0 + np.outer(a, p1 - p0) + np.outer(b, p2 - p0)
    return pts, W.ravel() * J


def phi_at(corners, pts):
    area = 0.5 * cross2(corners[1] - corners[0], corners[2] - corners[0])
    return (pts[:, None, :] - corners[None, :, :]) / (2 * area)


def mass_oracle(corners, a=lambda p: np.eye(2)):
    pts, w = collapsed_gauss(corners)
    phi = phi_at(corners, pts)
    M = np.zeros((3, 3))
    for q in range(len(w)):
        A = a(pts[q])
        M += w[q] * phi[q] @ A @ phi[q].T
    return M


def edge_flux_oracle(corners, field, j):
    """int over local edge j of field . n_j with scipy quad."""
    g = triangle_geometry(corners)
    a, b = corners[(j + 1) % 3], corners[(j + 2) % 3]
    n = g.normals[j]
    L = g.edge_lengths[j]
    return integrate.quad(lambda s: field(a + s * (b - a)) @ n * L, 0, 1, epsabs=1e-14)[0]


TRIANGLES = [
    REF,
    np.array([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]),
    np.array([[0.0, 0.0], [0.125, 0.0], [0.125, 0.125]]),
]


@pytest.mark.parametrize("corners", TRIANGLES)
def test_basis_edge_flux_normalization(corners):
    for i in range(3):
        for j in range(3):
            flux = edge_flux_oracle(corners, lambda p: phi_at(corners, p[None])[0, i], j)
            assert flux == pytest.approx(float(i == j), abs=1e-13)
    div = rt0_divergence(corners)
    area = triangle_geometry(corners).area
    assert np.allclose(div * area, 1.0)


@pytest.mark.parametrize("corners", TRIANGLES)
def test_mass_matches_independent_quadrature(corners):
    M = rt0_mass(corners)
    assert np.max(np.abs(M - mass_oracle(corners))) <= 1e-13
    assert np.allclose(M, M.T, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_mass_with_variable_coefficient():
    def a(x, y, t):
        return np.stack([np.stack([1 + x * x, x * y], -1), np.stack([x * y, 2 + y], -1)], -2)

    corners = TRIANGLES[1]
    M = rt0_mass(corners, a)
    oracle = mass_oracle(corners, lambda p: a(p[0], p[1], 0.0))
    # integrand has degree 4: the degree-5 rule is exact
    assert np.max(np.abs(M - oracle)) <= 1e-13


def test_mass_is_linear_in_coefficient():
    m = build_uniform_mesh(3)
    M1 = rt0_mass_matrix(m, 4)
    M2 = rt0_mass_matrix(m, 4, lambda x, y, t: 2 * np.broadcast_to(np.eye(2), np.shape(x) + (2, 2)))
    assert np.array_equal(M2, 2 * M1)


def test_rejects_indefinite_coefficient():
    bad = lambda x, y, t: np.broadcast_to(np.array([[1.0, 2.0], [2.0, 1.0]]), np.shape(x) + (2, 2))  # noqa: E731
    with pytest.raises(CoefficientError):
        rt0_mass(REF, bad)
    nonsym = lambda x, y, t: np.broadcast_to(np.array([[1.0, 0.5], [0.0, 1.0]]), np.shape(x) + (2, 2))  # noqa: E731
    with pytest.raises(CoefficientError):
        rt0_mass(REF, nonsym)


def test_constant_function_has_zero_weak_gradient():
    m = build_uniform_mesh(4)
    for t in (0, 7, 31):
        assert np.max(np.abs(weak_gradient_local(m, t, 3.2, [3.2, 3.2, 3.2]))) <= 1e-12


@pytest.mark.parametrize("corners", TRIANGLES)
def test_weak_gradient_defining_equation(corners):
    rng = np.random.default_rng(7)
    v0, vb = rng.standard_normal(), rng.standard_normal(3)
    g = np.linalg.solve(rt0_mass(corners), vb - v0)
    pts, w = collapsed_gauss(corners)
    phi = phi_at(corners, pts)
    grad_d = np.einsum("qid,i->qd", phi, g)
    area = triangle_geometry(corners).area
    for i in range(3):
        lhs = np.sum(w * np.einsum("qd,qd->q", grad_d, phi[:, i]))
        div_term = v0 * (1.0 / area) * area
        edge_terms = sum(vb[j] * edge_flux_oracle(corners, lambda p: phi_at(corners, p[None])[0, i], j) for j in range(3))
        assert abs(lhs + div_term - edge_terms) <= 1e-12


def test_weak_gradient_of_projected_linear_is_exact():
    m = build_uniform_mesh(4)
    G = WeakGradient(m)
    for w, const in (((lambda x, y, t: x), (1.0, 0.0)), ((lambda x, y, t: y), (0.0, 1.0))):
        field = G(project_qh(w, m))
        vals = field(m.cell_quadrature_points)
        assert np.max(np.abs(vals - np.array(const))) <= 1e-12


def test_local_gradient_map():
    m = build_uniform_mesh(3)
    for t in range(m.n_triangles):
        Gt = local_gradient_map(m, t)
        assert np.max(np.abs(Gt @ np.ones(4))) <= 1e-12
        assert np.allclose(Gt[:, 0], weak_gradient_local(m, t, 1.0, [0, 0, 0]), atol=1e-14)
        rng = np.random.default_rng(t)
        d = rng.standard_normal(4)
        assert np.allclose(Gt @ d, weak_gradient_local(m, t, d[0], d[1:]), atol=1e-12)
    # Q_h(y) maps to the RT0 coefficients of the constant field (0, 1)
    qy = project_qh(lambda x, y, t: y, m).local_dofs()
    const = project_rt0(lambda x, y, t: np.stack([0 * x, 0 * x + 1], -1), m).coeffs
    for t in range(m.n_triangles):
        assert np.allclose(local_gradient_map(m, t) @ qy[t], const[t], atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_p1_null_space_is_constants(n):
    m = build_uniform_mesh(n)
    maps = WeakGradient(m).maps
    s = np.linalg.svd(maps, compute_uv=False)
    assert s.shape == (m.n_triangles, 3)
    assert np.all(s[:, -1] >= 1e-3)
    for t in range(m.n_triangles):
        null = np.linalg.svd(maps[t])[2][-1]
        assert np.allclose(np.abs(null), 0.5, atol=1e-12)  # span{(1,1,1,1)}


def test_flux_form_of_right_hand_side():
    # b_i = -v0 int_T div phi_i + sum_j vb_j int_{e_j} phi_i . n_j = vb_i - v0
    corners = TRIANGLES[1]
    v0, vb = 0.3, np.array([1.0, -2.0, 0.5])
    area = triangle_geometry(corners).area
    b = np.array(
        [
            -v0 * rt0_divergence(corners)[i] * area
            + sum(vb[j] * edge_flux_oracle(corners, lambda p: phi_at(corners, p[None])[0, i], j) for j in range(3))
            for i in range(3)
        ]
    )
    assert np.allclose(b, vb - v0, atol=1e-13)


def test_project_rt0_reproduces_constants_and_zero():
    m = build_uniform_mesh(4)
    c = np.array([0.7, -1.3])
    proj = project_rt0(lambda x, y, t: np.broadcast_to(c, np.shape(x) + (2,)), m)
    assert np.max(np.abs(proj(m.cell_quadrature_points) - c)) <= 1e-13
    zero = project_rt0(lambda x, y, t: np.zeros(np.shape(x) + (2,)), m)
    assert np.all(zero.coeffs == 0)


def test_project_rt0_of_linear_field_against_oracle(reference_mesh):
    # grad(x^2/2) = (x, 0) on the reference triangle; oracle by adaptive 2D quadrature
    def q(x, y, t=0.0):
        return np.stack([x, 0 * x], -1)

    proj = project_rt0(q, reference_mesh).coeffs[0]
    rhs = np.array(
        [
            integrate.dblquad(lambda y, x: phi_at(REF, np.array([[x, y]]))[0, i] @ q(x, y), 0, 1, 0, lambda x: 1 - x, epsabs=1e-14)[0]
            for i in range(3)
        ]
    )
    oracle = np.linalg.solve(mass_oracle(REF), rhs)
    assert np.allclose(proj, oracle, atol=1e-13)
    assert np.allclose(proj, [0.5, -1 / 6, 1 / 6], atol=1e-13)
    # the projection keeps the total outward flux but not the individual edge fluxes
    fluxes = np.array([edge_flux_oracle(REF, lambda p: q(p[0], p[1]), j) for j in range(3)])
    assert np.allclose(fluxes, [0.5, 0.0, 0.0], atol=1e-13)
    assert proj.sum() == pytest.approx(fluxes.sum(), abs=1e-13)


def test_interpolate_rt0_matches_edge_fluxes(reference_mesh):
    def q(x, y, t=0.0):
        return np.stack([x * y + 1, y * y - x], -1)

    interp = interpolate_rt0(q, reference_mesh).coeffs[0]
    fluxes = [edge_flux_oracle(REF, lambda p: q(p[0], p[1]), j) for j in range(3)]
    assert np.allclose(interp, fluxes, atol=1e-13)


def test_interpolant_reproduces_rt0_fields():
    m = build_uniform_mesh(3)
    # x + (1, 2) lies in RT0
    field = lambda x, y, t: np.stack([x + 1, y + 2], -1)  # noqa: E731
    a = interpolate_rt0(field, m).coeffs
    b = project_rt0(field, m).coeffs
    assert np.max(np.abs(a - b)) <= 1e-13


@pytest.mark.parametrize("corners", TRIANGLES)
def test_basis_values(corners):
    pts = np.array([[[0.3, 0.2]]])
    assert np.allclose(rt0_basis(corners[None], pts)[0, 0], phi_at(corners, pts[0])[0])
