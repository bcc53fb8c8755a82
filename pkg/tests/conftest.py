import itertools

import numpy as np
import pytest

from hcl.grid import GridDomain, ScalarField, identity_chi
from hcl.solve import ProblemSpec
from hcl.symfunc import FuncFamily


def sigma_bruteforce(lam, k):
    """Independent oracle: k-th elementary symmetric by subset enumeration."""
    lam = list(lam)
    if k == 0:
        return 1.0
    return sum(
        float(np.prod(c)) for c in itertools.combinations(lam, k)
    )


def poisson_square_series(x, y, terms=399):
    """Series solution of the Euclidean problem -lap w = 1 on the unit square,
    w = 0 on the boundary; the Chern-convention solve of lap/4 h = 1 is
    h = -4 w."""
    total = 0.0
    pi = np.pi
    for m in range(1, terms + 1, 2):
        for n in range(1, terms + 1, 2):
            total += (
                np.sin(m * pi * x)
                * np.sin(n * pi * y)
                / (m * n * (m**2 + n**2))
            )
    return 16.0 / pi**4 * total


def manufactured_dirichlet_spec(N, amplitude=0.1, ny_x=4, ny_s=5,
                                family=None):
    """LogDet product instance with exact solution a sin(x1) sin(x2):
    psi from the analytic complex Hessian, phi the trace of the solution."""
    family = family or FuncFamily.log_det(2)
    dom = GridDomain.product(
        2,
        x_shape=(N, ny_x),
        s_shape=(N, ny_s),
        x_lengths=(2 * np.pi, 2 * np.pi),
        s_lengths=(np.pi, 1.0),
    )
    x1, _, x2, _ = dom.meshgrid()
    a = amplitude
    g = np.zeros(dom.shape + (2, 2), dtype=complex)
    g[..., 0, 0] = 1.0 - (a / 4.0) * np.sin(x1) * np.sin(x2)
    g[..., 1, 1] = g[..., 0, 0]
    g[..., 0, 1] = (a / 4.0) * np.cos(x1) * np.cos(x2)
    g[..., 1, 0] = g[..., 0, 1]
    lam = np.linalg.eigvalsh(g)
    psi = np.log(lam[..., 0]) + np.log(lam[..., 1])
    ustar = a * np.sin(x1) * np.sin(x2)
    spec = ProblemSpec(
        dom, family, identity_chi(dom), ScalarField(dom, psi),
        ScalarField(dom, ustar), "dirichlet",
    )
    return spec, ustar


def manufactured_closed_spec(N, amplitude=0.1, ny=4):
    """Torus instance with exact solution a sin(x1) sin(x2) and c -> 0."""
    dom = GridDomain.torus(2, (N, ny, N, ny))
    x1, _, x2, _ = dom.meshgrid()
    a = amplitude
    g = np.zeros(dom.shape + (2, 2), dtype=complex)
    g[..., 0, 0] = 1.0 - (a / 4.0) * np.sin(x1) * np.sin(x2)
    g[..., 1, 1] = g[..., 0, 0]
    g[..., 0, 1] = (a / 4.0) * np.cos(x1) * np.cos(x2)
    g[..., 1, 0] = g[..., 0, 1]
    lam = np.linalg.eigvalsh(g)
    psi = np.log(lam[..., 0]) + np.log(lam[..., 1])
    ustar = a * np.sin(x1) * np.sin(x2)
    spec = ProblemSpec(
        dom, FuncFamily.log_det(2), identity_chi(dom),
        ScalarField(dom, psi), None, "closed",
    )
    return spec, ustar


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240813)
