"""Pointwise curvature against closed forms and finite-difference oracles."""

import math

import numpy as np
import pytest

from hml import catalog, jets
from hml.curvature import (christoffels, curvature, curvature_arrays,
                           einstein_defect, gradient_norm_sq, hessian,
                           laplacian, sectional_curvature)
from hml.metric import (ChartMetric, DegenerateMetricError, DomainError,
                        OrderExceededError, ScalarField)

import oracles


ALL_CATALOG = ["euclid3", "sphere3", "round_sf3", "hyperbolic3", "fs2"]


def sample_points(entry, rng, n):
    """Random points safely inside the chart domain (near the center)."""
    scale = {"euclidean": 0.8, "sphere": 0.5, "space_form": 0.4,
             "fubini_study": 0.5, "two_d_family": 0.0}[entry.name]
    pts = rng.uniform(-scale, scale, size=(n, entry.dim))
    assert np.all(entry.metric.contains(pts))
    return pts


# ---------------------------------------------------------------------------
# christoffels
# ---------------------------------------------------------------------------

def test_christoffels_euclidean_zero(euclid3):
    Gam = christoffels(euclid3.metric, [0.1, 0.5, -0.2])
    assert np.max(np.abs(Gam)) == 0.0


def test_christoffels_polar_surface():
    # ds^2 = dr^2 + f dtheta^2, f = r^2:
    # Gamma_theta,theta^r = -f_r/2 = -r and Gamma_r,theta^theta = f_r/(2f) = 1/r
    fam = catalog.two_d_family(2, 0.0)
    Gam = christoffels(fam.metric, [1.0, 0.3])
    assert Gam[1, 1, 0] == pytest.approx(-1.0, rel=1e-12)
    assert Gam[0, 1, 1] == pytest.approx(1.0, rel=1e-12)


def test_christoffels_match_fd_koszul(rng):
    entry = catalog.space_form(0.7, 0.3, 3)
    for _ in range(4):
        x = rng.uniform(-0.4, 0.4, 3)
        Gam = christoffels(entry.metric, x)
        Gam_fd = oracles.fd_christoffels(entry.metric, x)
        assert np.max(np.abs(Gam - Gam_fd)) < 1e-8


@pytest.mark.parametrize("name", ALL_CATALOG)
def test_fd_oracles_every_catalog_metric(name, rng, request):
    """Gamma, R and Hess agree with O(h^4) finite differences everywhere."""
    entry = request.getfixturevalue(name)
    x = sample_points(entry, rng, 1)[0]
    Gam = christoffels(entry.metric, x)
    assert np.max(np.abs(Gam - oracles.fd_christoffels(entry.metric, x))) < 1e-6
    b = curvature(entry.metric, x, k_max=0)
    assert np.max(np.abs(b.riemann - oracles.fd_riemann(entry.metric, x))) < 1e-6
    phi = ScalarField(lambda xj: jets.sin(xj[0]) * (1.0 + xj[1]), name="probe")
    H = hessian(entry.metric, phi, x)
    H_fd = oracles.fd_covariant_hessian(
        entry.metric, lambda y: math.sin(y[0]) * (1.0 + y[1]), x)
    assert np.max(np.abs(H - H_fd)) < 1e-6


# ---------------------------------------------------------------------------
# curvature bundles
# ---------------------------------------------------------------------------

def test_curvature_euclidean_all_zero(euclid3):
    b = curvature(euclid3.metric, [0.2, -0.3, 0.7], k_max=2)
    assert np.max(np.abs(b.riemann)) == 0.0
    for T in b.nabla_r:
        assert np.max(np.abs(T)) == 0.0


def test_round_sphere_sectional_and_parallel(round_sf3, rng):
    x = np.array([0.25, -0.1, 0.3])
    b = curvature(round_sf3.metric, x, k_max=1)
    for _ in range(5):
        u, v = rng.normal(size=3), rng.normal(size=3)
        assert sectional_curvature(b, u, v) == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(b.nabla_r[0])) < 1e-12


def test_fubini_study_symmetric_space(fs2, rng):
    x = rng.uniform(-0.4, 0.4, 4)
    b = curvature(fs2.metric, x, k_max=1)
    assert einstein_defect(b) < 1e-8
    assert np.max(np.abs(b.nabla_r[0])) < 1e-8
    # independent covariant-derivative oracle: FD outer differentiation
    def riem(y):
        return curvature(fs2.metric, y, k_max=0).riemann

    def gam(y):
        return christoffels(fs2.metric, y)

    nabla_fd = oracles.fd_nabla_riemann(fs2.metric, x, riem, gam)
    assert np.max(np.abs(nabla_fd)) < 1e-8


def test_curvature_matches_fd_oracle(sphere3, rng):
    x = rng.uniform(-0.4, 0.4, 3)
    b = curvature(sphere3.metric, x, k_max=0)
    R_fd = oracles.fd_riemann(sphere3.metric, x)
    assert np.max(np.abs(b.riemann - R_fd)) < 1e-6


def test_fast_path_matches_bundle(fs2, rng):
    pts = rng.uniform(-0.3, 0.3, size=(5, 4))
    g, ginv, Gam, R = curvature_arrays(fs2.metric, pts)
    for i, x in enumerate(pts):
        b = curvature(fs2.metric, x, k_max=0)
        assert np.max(np.abs(R[i] - b.riemann)) < 1e-11
        assert np.max(np.abs(Gam[i] - b.christoffels)) < 1e-12


@pytest.mark.parametrize("name", ALL_CATALOG)
def test_symmetries_and_first_bianchi(name, rng, request):
    entry = request.getfixturevalue(name)
    pts = sample_points(entry, rng, 100)
    _, _, _, R = curvature_arrays(entry.metric, pts)
    scale = max(np.max(np.abs(R)), 1.0)
    assert np.max(np.abs(R + np.einsum('...jikl->...ijkl', R))) < 1e-9 * scale
    assert np.max(np.abs(R + np.einsum('...ijlk->...ijkl', R))) < 1e-9 * scale
    assert np.max(np.abs(R - np.einsum('...klij->...ijkl', R))) < 1e-9 * scale
    bianchi = (R + np.einsum('...iklj->...ijkl', R)
               + np.einsum('...iljk->...ijkl', R))
    assert np.max(np.abs(bianchi)) < 1e-9 * scale


@pytest.mark.parametrize("name", ["sphere3", "round_sf3", "fs2"])
def test_contracted_second_bianchi(name, rng, request):
    # div ricci = d(scal)/2, both sides assembled from grad R
    entry = request.getfixturevalue(name)
    x = sample_points(entry, rng, 1)[0]
    b = curvature(entry.metric, x, k_max=1)
    nabla = b.nabla_r[0]                       # [i,j,k,l,p]
    grad_ricci = np.einsum('il,ijklp->jkp', b.ginv, nabla)
    div_ricci = np.einsum('pj,jkp->k', b.ginv, grad_ricci)
    grad_scal = np.einsum('jk,jkp->p', b.ginv, grad_ricci)
    assert np.max(np.abs(div_ricci - 0.5 * grad_scal)) < 1e-7


def test_ricci_symmetric(fs2, rng):
    x = rng.uniform(-0.5, 0.5, 4)
    b = curvature(fs2.metric, x, k_max=0)
    assert np.max(np.abs(b.ricci - b.ricci.T)) < 1e-12


# ---------------------------------------------------------------------------
# hessian, laplacian
# ---------------------------------------------------------------------------

def test_hessian_euclidean_norm_sq(euclid3):
    phi = ScalarField(jets.norm_sq, name="r2")
    H = hessian(euclid3.metric, phi, np.array([0.4, -0.2, 0.9]))
    assert np.max(np.abs(H - 2 * np.eye(3))) < 1e-13
    x = np.array([0.4, -0.2, 0.9])
    assert laplacian(euclid3.metric, phi, x) == pytest.approx(-6.0, rel=1e-12)
    assert gradient_norm_sq(euclid3.metric, phi, x) == pytest.approx(
        4 * float(x @ x), rel=1e-12)


def test_hessian_radial_structure_euclidean(euclid4):
    # Psi = psi(|x|^2) at x = (r, 0, 0, 0):
    # Hess = diag(2 psi' + 4 r^2 psi'', 2 psi', 2 psi', 2 psi')
    def psi_field(xj):
        t = jets.norm_sq(xj)
        return jets.exp(t * 0.3)

    phi = ScalarField(psi_field)
    r = 0.8
    t = r * r
    p1 = 0.3 * math.exp(0.3 * t)
    p2 = 0.09 * math.exp(0.3 * t)
    H = hessian(euclid4.metric, phi, np.array([r, 0, 0, 0.0]))
    expected = np.diag([2 * p1 + 4 * r * r * p2, 2 * p1, 2 * p1, 2 * p1])
    assert np.max(np.abs(H - expected)) < 1e-12


def test_hessian_matches_fd_oracle(sphere3):
    phi = ScalarField(lambda xj: xj[0], name="x1")
    x = np.array([0.5, 0.2, -0.3])
    H = hessian(sphere3.metric, phi, x)
    H_fd = oracles.fd_covariant_hessian(
        sphere3.metric, lambda y: y[0], x)
    assert np.max(np.abs(H - H_fd)) < 1e-7
    assert np.max(np.abs(H - H.T)) < 1e-12


# ---------------------------------------------------------------------------
# sectional curvature and einstein defect
# ---------------------------------------------------------------------------

def test_sectional_euclidean_zero(euclid3, rng):
    b = curvature(euclid3.metric, [0.1, 0.2, 0.3], k_max=0)
    u, v = rng.normal(size=3), rng.normal(size=3)
    assert sectional_curvature(b, u, v) == pytest.approx(0.0, abs=1e-14)


def test_sectional_paper_space_forms(rng):
    b = curvature(catalog.space_form(1.0, 0.25, 3).metric,
                  rng.uniform(-0.5, 0.5, 3), k_max=0)
    u, v = rng.normal(size=3), rng.normal(size=3)
    assert sectional_curvature(b, u, v) == pytest.approx(1.0, abs=1e-8)
    bh = curvature(catalog.space_form(0.5, -0.5, 3).metric,
                   rng.uniform(-0.3, 0.3, 3), k_max=0)
    assert sectional_curvature(bh, u, v) == pytest.approx(-1.0, abs=1e-8)


def test_sectional_plane_basis_invariance(fs2, rng):
    b = curvature(fs2.metric, rng.uniform(-0.3, 0.3, 4), k_max=0)
    u, v = rng.normal(size=4), rng.normal(size=4)
    k1 = sectional_curvature(b, u, v)
    k2 = sectional_curvature(b, 2.0 * u + 0.3 * v, -1.2 * v)
    assert k1 == pytest.approx(k2, rel=1e-10)


def test_sectional_degenerate_plane_rejected(euclid3):
    b = curvature(euclid3.metric, [0, 0, 0.0], k_max=0)
    u = np.array([1.0, 2.0, -1.0])
    with pytest.raises(ValueError):
        sectional_curvature(b, u, 3.0 * u)


def test_einstein_defect_values(euclid3, fs2):
    be = curvature(euclid3.metric, [0.3, 0.1, 0.0], k_max=0)
    assert einstein_defect(be) == 0.0
    bf = curvature(fs2.metric, [0.2, -0.1, 0.3, 0.1], k_max=0)
    assert einstein_defect(bf) < 1e-8


def test_einstein_defect_deformed_sphere_equator():
    from hml.conformal import deform_metric
    from hml.manifest import _sphere_height_psi
    sp = catalog.sphere(4)
    ms = deform_metric(sp.metric, _sphere_height_psi([1.0, 0.25]))
    b = curvature(ms, np.array([math.pi / 2, 0, 0, 0]), k_max=0)
    assert einstein_defect(b) > 1e-3


def test_einstein_defect_chart_scaling_invariance(fs2):
    c = 2.5
    base = fs2.metric

    def scaled_components(xj):
        return [[c * c * comp for comp in row]
                for row in base.components([c * xi for xi in xj])]

    scaled = ChartMetric(dim=4, components=scaled_components, name="scaled")
    x = np.array([0.1, -0.2, 0.05, 0.15])
    d1 = einstein_defect(curvature(base, c * x, k_max=0))
    d2 = einstein_defect(curvature(scaled, x, k_max=0))
    assert d1 == pytest.approx(d2, abs=1e-8)


# ---------------------------------------------------------------------------
# chart plumbing
# ---------------------------------------------------------------------------

def test_domain_enforced():
    hyp = catalog.space_form(0.5, -0.5, 3)
    with pytest.raises(DomainError):
        hyp.metric.value(np.array([1.2, 0, 0]))


def test_degenerate_metric_reported():
    bad = ChartMetric(
        dim=2,
        components=lambda xj: [[xj[0] * 0 + 1.0, 0.0], [0.0, xj[0] * 0]],
        name="degenerate")
    with pytest.raises(DegenerateMetricError):
        bad.check_positive_definite(np.array([0.3, 0.4]))


def test_order_exceeded_error(euclid3):
    limited = ChartMetric(dim=3, components=euclid3.metric.components,
                          name="limited", max_order=3)
    with pytest.raises(OrderExceededError):
        curvature(limited, [0.0, 0.0, 0.0], k_max=2)   # needs order 4
    b = curvature(limited, [0.0, 0.0, 0.0], k_max=1)
    with pytest.raises(OrderExceededError):
        b.nabla(2)


def test_metric_derivatives_consistent_with_fd(fs2):
    x = np.array([0.3, 0.1, -0.2, 0.4])
    g, dg, _ = fs2.metric.derivative_arrays(x, 2)
    dg_fd = oracles.fd1(fs2.metric.value, x)
    assert np.max(np.abs(dg - dg_fd)) < 1e-9


def test_positive_definite_sampled(sphere4, rng):
    pts = rng.uniform(-0.6, 0.6, size=(10, 4))
    for p in pts:
        assert sphere4.metric.check_positive_definite(p)
