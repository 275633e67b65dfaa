import pytest

from robinlab import fem
from robinlab.geometry import DomainSpec


@pytest.fixture(scope="session")
def disk_mesh_03():
    return fem.mesh(DomainSpec.disk(1.0), 0.03)


@pytest.fixture(scope="session")
def square_dirichlet_modes():
    m = fem.mesh(DomainSpec.rectangle(1.0, 1.0, h="dirichlet"), 0.02)
    ops = fem.assemble(m)
    sp, X = fem.solve_eigens(ops, 10)
    return m, ops, sp, X
