from __future__ import annotations

import numpy as np
import pytest

from billiards import Cylinder, Domain, PhasePoint, Torus, build_hardball_gas, build_sinai


@pytest.fixture(scope="session")
def sinai2d() -> Domain:
    return build_sinai(2, 0.25, 1.0, [[0.5, 0.5]])


@pytest.fixture(scope="session")
def sinai3d() -> Domain:
    return build_sinai(3, 0.3, 1.0, [[0.5, 0.5, 0.5]])


@pytest.fixture(scope="session")
def cylinder3d() -> Domain:
    cyl = Cylinder(np.array([0.5, 0.5, 0.0]), np.array([[0.0, 0.0, 1.0]]), 0.2)
    return Domain(3, Torus(1.0), [cyl])


@pytest.fixture(scope="session")
def hardball32() -> Domain:
    return build_hardball_gas(3, 2, 0.1, 1.0)


def random_phase_point(domain: Domain, rng: np.random.Generator,
                       margin: float = 1e-6) -> PhasePoint:
    """Uniform valid phase point, rejection-sampled outside the scatterers."""
    if hasattr(domain.ambient, "sides"):
        highs = np.asarray(domain.ambient.sides)
    else:
        highs = np.full(domain.d, domain.ambient.side)
    while True:
        q = rng.uniform(0.0, 1.0, domain.d) * highs
        if domain.contains(q, slack=-margin * domain.length_scale):
            break
    v = rng.standard_normal(domain.d)
    return PhasePoint(q, v / np.linalg.norm(v))
