import numpy as np
import pytest

from wavecontrol import (RigidBody2D, SliceGeometryConfig, WaveEnvironment, assemble,
                         assemble_membrane_tensors, assemble_plate_tensor, build_slice_mesh)

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def env():
    return WaveEnvironment.from_period(1.2, depth=2.5)


@pytest.fixture(scope="session")
def body(env):
    return RigidBody2D(env.rho / 2, 0.5)


@pytest.fixture(scope="session")
def mesh():
    return build_slice_mesh(SliceGeometryConfig())


@pytest.fixture(scope="session")
def coarse_mesh():
    return build_slice_mesh(SliceGeometryConfig(mesh_size=0.25, half_width=3.0))


@pytest.fixture(scope="session")
def ops(mesh, env):
    return assemble(mesh, env)


@pytest.fixture(scope="session")
def coarse_ops(coarse_mesh, env):
    return assemble(coarse_mesh, env)


@pytest.fixture(scope="session")
def membrane(ops):
    return assemble_membrane_tensors(ops)


@pytest.fixture(scope="session")
def plate(ops):
    return assemble_plate_tensor(ops)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
