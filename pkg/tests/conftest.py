"""Shared fixtures: problem instances and grids reused across test modules.

Session scope keeps the expensive objects (grids, kernel fields) built once.
"""

import numpy as np
import pytest

from pencil_spectra.model import (
    ScalarFunctionSpec,
    UniformGrid,
    make_problem,
    zero_problem,
)


@pytest.fixture(scope="session")
def grid400():
    return UniformGrid.from_steps(400)


@pytest.fixture(scope="session")
def grid1000():
    return UniformGrid.from_steps(1000)


@pytest.fixture(scope="session")
def grid2000():
    return UniformGrid.from_steps(2000)


@pytest.fixture(scope="session")
def zero_d1():
    return zero_problem(1)


@pytest.fixture(scope="session")
def zero_d2():
    return zero_problem(2)


@pytest.fixture(scope="session")
def const_p05():
    """d=1, constant P = 0.5, Q = 0."""
    return make_problem(1, [ScalarFunctionSpec.constant(0.5)],
                        [ScalarFunctionSpec.zero()])


@pytest.fixture(scope="session")
def const_q01():
    """d=1, P = 0, constant Q = 0.1."""
    return make_problem(1, [ScalarFunctionSpec.zero()],
                        [ScalarFunctionSpec.constant(0.1)])


@pytest.fixture(scope="session")
def trig_d1():
    """d=1 smooth instance: p = 0.3 cos x, q = 0.2 cos x."""
    return make_problem(1, [ScalarFunctionSpec.cosine_series((0.0, 0.3))],
                        [ScalarFunctionSpec.cosine_series((0.0, 0.2))])


@pytest.fixture(scope="session")
def circulant_d2():
    """d=2 commuting family: equal diagonal q, symmetric off-diagonal, P = 0.

    Every Q(x) lies in span{I, swap}, so the coefficient algebra commutes.
    """
    return make_problem(
        2,
        [ScalarFunctionSpec.zero(), ScalarFunctionSpec.zero()],
        [ScalarFunctionSpec.cosine_series((0.0, 0.2)),
         ScalarFunctionSpec.cosine_series((0.0, 0.1)),
         ScalarFunctionSpec.cosine_series((0.0, 0.2))],
    )


@pytest.fixture(scope="session")
def block_diag_d2():
    """d=2 decoupled channels: q11 = 0.1, q22 = 0.25, q12 = 0."""
    return make_problem(
        2,
        [ScalarFunctionSpec.zero(), ScalarFunctionSpec.zero()],
        [ScalarFunctionSpec.constant(0.1), ScalarFunctionSpec.zero(),
         ScalarFunctionSpec.constant(0.25)],
    )


def write_config(path, problem, grid_n, q_tilde=None):
    """Serialize a problem document to path, return the path as str."""
    from pencil_spectra.model import serialize_problem_document

    path.write_text(serialize_problem_document(problem, grid_n, q_tilde=q_tilde))
    return str(path)


@pytest.fixture()
def tmp_config(tmp_path):
    """Factory fixture writing problem documents into the test's tmp dir."""
    def factory(problem, grid_n, q_tilde=None, name="problem.json"):
        return write_config(tmp_path / name, problem, grid_n, q_tilde=q_tilde)

    return factory
