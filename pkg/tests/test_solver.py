import math

import numpy as np
import pytest
from scipy.optimize import brentq

from wavecontrol.errors import InadmissibleControl
from wavecontrol.fem import assemble, assemble_membrane_tensors, assemble_plate_tensor
from wavecontrol.geometry import BoundaryTag, SliceGeometryConfig, build_channel_mesh, build_slice_mesh
from wavecontrol.physics import WaveEnvironment
from wavecontrol.solver import (build_system, check_admissible, scattered_ratio,
                                solve_adjoint_membrane, solve_adjoint_pressure,
                                solve_state_membrane, solve_state_plate, solve_state_pressure)


def _neutral(l, eps=1e-6):
    return np.full(l, eps), np.full(l, 1 - eps)


@pytest.fixture(scope="module")
def coarse(coarse_ops):
    return coarse_ops, assemble_membrane_tensors(coarse_ops), assemble_plate_tensor(coarse_ops)


def _with_amplitude(ops, a):
    return assemble(ops.mesh, ops.env.with_amplitude(a))


@pytest.mark.parametrize("mode", ["pressure", "membrane", "plate"])
def test_zero_state_and_linearity_in_amplitude(mode, coarse_ops, body):
    """The state is linear in the incident amplitude; A = 0 gives zero."""
    states = []
    for a in (0.0, 1.0, 2.0):
        o = _with_amplitude(coarse_ops, a)
        l = o.control.size
        if mode == "pressure":
            st = solve_state_pressure(o, body)
        elif mode == "membrane":
            st = solve_state_membrane(o, assemble_membrane_tensors(o), body, np.full(l, 0.7), np.full(l, 0.4))
        else:
            st = solve_state_plate(o, assemble_plate_tensor(o), body, np.full(l, 0.7), np.full(l, 0.4))
        states.append(st)
    z, one, two = states
    assert np.abs(z.phi).max() == 0 and np.abs(z.X).max() == 0
    assert np.allclose(two.phi, 2 * one.phi, rtol=1e-12, atol=1e-14 * np.abs(one.phi).max())
    assert np.allclose(two.X, 2 * one.X, rtol=1e-12)
    assert one.residual_norm < 1e-12


def test_pressure_state_linear_in_control(coarse_ops, body, rng):
    l = coarse_ops.control.size
    sys_ = build_system(coarse_ops, body, "pressure")
    u1 = 1e3 * (rng.standard_normal(l) + 1j * rng.standard_normal(l))
    u2 = 1e3 * rng.standard_normal(l)
    s0 = solve_state_pressure(coarse_ops, body, None, sys_)
    s1 = solve_state_pressure(coarse_ops, body, u1, sys_)
    s2 = solve_state_pressure(coarse_ops, body, u2, sys_)
    s12 = solve_state_pressure(coarse_ops, body, u1 + u2, sys_)
    assert np.allclose(s12.X - s0.X, (s1.X - s0.X) + (s2.X - s0.X), rtol=1e-10)


@pytest.mark.parametrize("mode", ["membrane", "plate"])
def test_neutral_controls_match_free_surface(mode, coarse, body):
    """Vanishing stiffness and mass make the cover a free surface."""
    ops, mem, pl = coarse
    u, v = _neutral(ops.control.size)
    ref = solve_state_pressure(ops, body)
    solve = solve_state_membrane if mode == "membrane" else solve_state_plate
    st = solve(ops, mem if mode == "membrane" else pl, body, u, v)
    assert np.linalg.norm(st.X - ref.X) < 1e-4 * np.linalg.norm(ref.X)
    assert np.linalg.norm(st.phi - ref.phi) < 1e-4 * np.linalg.norm(ref.phi)


def test_heave_response_nonzero(ops, body):
    st = solve_state_pressure(ops, body)
    assert abs(st.X[1]) > 0.05
    # a symmetric body under a symmetric load: surge and roll are of the same order
    assert np.all(np.isfinite(st.X))


def test_direction_mirror_symmetry(coarse_ops, body):
    """Reversing the incident direction mirrors the response: heave unchanged in modulus."""
    env = coarse_ops.env
    back = assemble(coarse_ops.mesh, WaveEnvironment(omega=env.omega, depth=env.depth,
                                                     direction=-env.direction))
    a = solve_state_pressure(coarse_ops, body).X
    b = solve_state_pressure(back, body).X
    # the unstructured mesh is only approximately mirror-symmetric
    assert abs(a[1]) == pytest.approx(abs(b[1]), rel=1e-4)
    assert abs(a[0]) == pytest.approx(abs(b[0]), rel=1e-4)


def test_adjoint_identity(coarse, body, rng):
    """<S^H p, y> = <p, S y> for the monolithic passive operator."""
    ops, mem, _ = coarse
    l = ops.control.size
    u, v = np.full(l, 0.8), np.full(l, 0.3)
    sys_ = build_system(ops, body, "membrane", mem, u, v)
    n = sys_.offsets[-1]
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y, _ = sys_.solve(b)
    p, res = sys_.solve_adjoint(c)
    assert res < 1e-10
    assert np.vdot(p, b) == pytest.approx(np.vdot(c, y), rel=1e-9)


def test_adjoint_functions(coarse, body):
    ops, mem, _ = coarse
    l = ops.control.size
    C = np.diag([1.0, 1.0, 0.25])
    st = solve_state_pressure(ops, body)
    adj = solve_adjoint_pressure(ops, body, st.X, C)
    assert adj.residual_norm < 1e-10 and adj.mu is None
    u, v = np.full(l, 0.8), np.full(l, 0.3)
    st = solve_state_membrane(ops, mem, body, u, v)
    adj = solve_adjoint_membrane(ops, mem, body, st, C, u, v)
    assert adj.mu.shape == (mem.n_eta,)
    assert adj.residual_norm < 1e-10


def test_extended_refinement_reduces_residual(coarse, body):
    ops, _, pl = coarse
    l = ops.control.size
    sys_ = build_system(ops, body, "plate", pl, np.full(l, 2.0), np.full(l, 0.4))
    b = sys_.rhs()
    y0, r0 = sys_.solve(b)
    y1, r1 = sys_.solve(b, refine=2)
    assert r1 <= r0 + 1e-16
    assert np.linalg.norm(y1 - y0) < 1e-6 * np.linalg.norm(y0)


@pytest.mark.parametrize("u,v", [([0.0], [0.5]), ([1.0], [0.0]), ([1.0], [1.0]), ([-1.0], [0.5])])
def test_inadmissible_controls(u, v):
    with pytest.raises(InadmissibleControl):
        check_admissible(np.array(u), np.array(v))


def test_build_system_rejects_inadmissible(coarse, body):
    ops, mem, _ = coarse
    l = ops.control.size
    with pytest.raises(InadmissibleControl):
        build_system(ops, body, "membrane", mem, np.zeros(l), np.full(l, 0.5))
    with pytest.raises(ValueError):
        build_system(ops, body, "shell", mem, np.ones(l), np.full(l, 0.5))


def test_no_obstacle_coarse(env):
    """Body removed, neutral membrane: the incident wave passes unscattered."""
    m = build_slice_mesh(SliceGeometryConfig(with_body=False, mesh_size=env.wavelength / 10))
    ops = assemble(m, env)
    mem = assemble_membrane_tensors(ops)
    u, v = _neutral(ops.control.size)
    st = solve_state_membrane(ops, mem, None, u, v)
    assert scattered_ratio(ops, st.phi) < 5e-2
    assert scattered_ratio(ops, st.phi, BoundaryTag.CONTROL_SURFACE) < 5e-2
    assert np.all(st.X == 0)


# --- loaded-dispersion channel oracles --------------------------------------

def loaded_wavenumber(env, mode, u, v, length):
    """Root of (g v + T k^p / rho) k tanh(k h) = omega^2 with T = u rho g length^p."""
    p = 2 if mode == "membrane" else 4
    T = u * env.rho * env.g * length ** p
    f = lambda k: (env.g * v + T / env.rho * k ** p) * k * math.tanh(k * env.depth) - env.omega ** 2
    return brentq(f, 1e-9, 100.0, xtol=1e-14)


def channel_wavenumber(tensors, eta, k_guess, x0=-3.0, x1=3.0):
    """Recover k from eta(x+d) + eta(x-d) = 2 cos(kd) eta(x) in the channel interior."""
    xs = np.linspace(x0, x1, 401)
    d = 2 * math.pi / k_guess / 8
    f, fp, fm = (tensors.evaluate(eta, xs + s) for s in (0.0, d, -d))
    c = np.vdot(f, fp + fm) / np.vdot(f, f) / 2
    return math.acos(c.real) / d


def test_loaded_dispersion_oracle_values():
    env = WaveEnvironment.from_period(1.2, depth=1.0)
    k_free = env.k
    # neutral cover reproduces the free-surface root; tension speeds waves up, mass slows them down
    assert loaded_wavenumber(env, "membrane", 0.0, 1.0, 0.5) == pytest.approx(k_free, rel=1e-12)
    assert loaded_wavenumber(env, "membrane", 1.0, 1.0, 0.5) < k_free
    assert loaded_wavenumber(env, "plate", 0.0, 0.5, 0.5) > k_free


@pytest.mark.parametrize("mode", ["membrane", "plate"])
def test_channel_loaded_dispersion(mode):
    env = WaveEnvironment.from_period(1.2, depth=1.0)
    ell = 0.5
    m = build_channel_mesh(8.0, 1.0, 0.1)
    ops = assemble(m, env)
    tens = assemble_membrane_tensors(ops) if mode == "membrane" else assemble_plate_tensor(ops)
    solve = solve_state_membrane if mode == "membrane" else solve_state_plate
    l = ops.control.size
    for u, v in ((1.0, 0.5), (0.2, 0.8)):
        k0 = loaded_wavenumber(env, mode, u, v, ell)
        st = solve(ops, tens, None, np.full(l, u), np.full(l, v), length=ell)
        assert channel_wavenumber(tens, st.eta, k0) == pytest.approx(k0, rel=1e-2)
