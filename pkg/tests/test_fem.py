import math

import numpy as np
import pytest
from scipy import special

from robinlab import fem, spectra
from robinlab.geometry import DomainSpec

J0 = special.jn_zeros(0, 1)[0]


def test_square_mesh_size_and_euler():
    m = fem.mesh(DomainSpec.rectangle(1, 1), 0.1)
    assert 200 <= len(m.triangles) <= 260
    V, E, F = m.n_vertices, len(m.edges()), len(m.triangles)
    assert V - E + F == 1


def test_disk_boundary_on_circle_and_refinement():
    m = fem.mesh(DomainSpec.disk(1.0), 0.05)
    r = np.hypot(*m.vertices[m.on_boundary].T)
    assert np.max(np.abs(r - 1)) < 1e-12
    m2 = fem.mesh(DomainSpec.disk(1.0), 0.025)
    assert 3.5 < len(m2.triangles) / len(m.triangles) < 4.5
    assert m2.min_angle() >= fem.MIN_ANGLE_DEG


def test_assembly_identities(disk_mesh_03):
    m = disk_mesh_03
    one = np.ones(m.n_vertices)
    ops = fem.assemble(m, h=0.0)
    assert abs(one @ ops.M @ one - math.pi) < 1e-10 * math.pi + 2e-3  # polygonal area vs pi
    assert one @ ops.M @ one == pytest.approx(m.areas().sum(), rel=1e-10)
    assert np.max(np.abs(ops.A @ one)) < 1e-10
    assert ops.B.nnz == 0 or np.max(np.abs(ops.B.data)) == 0
    c = 1.7
    ops = fem.assemble(m, h=c)
    S = float(np.sum(np.linalg.norm(np.diff(m.vertices[m.boundary_edges], axis=1)[:, 0], axis=1)))
    assert one @ ops.B @ one == pytest.approx(c * S, rel=1e-10)


def test_unknown_segment_rejected(disk_mesh_03):
    with pytest.raises(ValueError):
        fem.assemble(disk_mesh_03, h=[0.0, 1.0, 2.0])


def test_neumann_disk(disk_mesh_03):
    sp, X = fem.solve_eigens(fem.assemble(disk_mesh_03, h=0.0), 3)
    mu = sp.expanded()
    assert abs(mu[0]) < 1e-8
    ref = special.jnp_zeros(1, 1)[0] ** 2
    assert abs(mu[1] - ref) / ref < 0.02 and abs(mu[2] - ref) / ref < 0.02


def test_negative_ground_state(disk_mesh_03):
    sp, _ = fem.solve_eigens(fem.assemble(disk_mesh_03, h=-1.0), 1)
    ref = spectra.disk_robin_spectrum(1.0, -1.0, 1).expanded()[0]
    assert sp.expanded()[0] < 0
    assert sp.expanded()[0] == pytest.approx(ref, rel=0.02)


def test_fem_above_certified_lower_bound(disk_mesh_03):
    ops = fem.assemble(disk_mesh_03, h=1.0)
    sp, _ = fem.solve_eigens(ops, 1)
    assert fem.certified_lower_bound(*ops.reduced()) <= sp.expanded()[0] + 1e-9


def test_mixed_interior_disk():
    r = 0.1
    m = fem.mesh(DomainSpec.disk(1.0), r / 8)
    c = m.vertices[m.triangles].mean(axis=1)
    lam = fem.mixed_dn_eigenvalue(m, np.hypot(*c.T) < r)
    assert lam == pytest.approx(J0 ** 2 / r ** 2, rel=0.02)


def test_mixed_half_disk():
    r = 0.2
    m = fem.mesh(DomainSpec.rectangle(1, 1), 0.005)
    c = m.vertices[m.triangles].mean(axis=1)
    lam, area = fem.mixed_dn_eigenvalue(m, np.hypot(c[:, 0] - 0.5, c[:, 1]) < r, return_area=True)
    assert lam == pytest.approx(J0 ** 2 / r ** 2, rel=0.03)
    assert lam * area == pytest.approx(J0 ** 2 * math.pi / 2, rel=0.05)


def test_mixed_whole_domain_is_neumann(disk_mesh_03):
    assert abs(fem.mixed_dn_eigenvalue(disk_mesh_03, np.ones(len(disk_mesh_03.triangles), bool))) < 1e-8


def test_mixed_empty_subset_rejected(disk_mesh_03):
    with pytest.raises(ValueError):
        fem.mixed_dn_eigenvalue(disk_mesh_03, np.zeros(len(disk_mesh_03.triangles), bool))


def test_rayleigh_quotients():
    m = fem.mesh(DomainSpec.disk(1.0, h="dirichlet"), 0.03)
    ops = fem.assemble(m)
    sp, X = fem.solve_eigens(ops, 1)
    everything = np.ones(len(m.triangles), bool)
    assert fem.rayleigh_quotient(X[:, 0], everything, ops) == pytest.approx(J0 ** 2, rel=0.01)
    m = fem.mesh(DomainSpec.disk(1.0), 0.05)
    ops = fem.assemble(m)
    _, X = fem.solve_eigens(ops, 1)
    everything = np.ones(len(m.triangles), bool)
    assert abs(fem.rayleigh_quotient(X[:, 0], everything, ops)) < 1e-8
    with pytest.raises(ValueError):
        fem.rayleigh_quotient(np.zeros(m.n_vertices), everything, ops)


def test_nodal_resolution_guard():
    with pytest.raises(ValueError):
        fem.require_nodal_resolution(0.05, 400.0)
    fem.require_nodal_resolution(fem.nodal_target_h(400.0), 400.0)


def test_eigenvector_csv_round_trip(disk_mesh_03):
    x = np.linspace(-1, 1, 7)
    got_x, got_mu, got_k = fem.read_eigenvector_csv(fem.eigenvector_csv(x, 3.5, 2))
    np.testing.assert_array_equal(got_x, x)
    assert (got_mu, got_k) == (3.5, 2)


def test_mesh_json_round_trip():
    m = fem.mesh(DomainSpec.rectangle(1, 1), 0.2)
    back = fem.Mesh.from_json(m.to_json())
    np.testing.assert_array_equal(back.triangles, m.triangles)
    np.testing.assert_array_equal(back.vertices, m.vertices)
