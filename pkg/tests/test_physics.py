import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavecontrol.errors import BuoyancyImbalance
from wavecontrol.physics import (GRAVITY, RHO_WATER, RigidBody2D, WaveEnvironment, body_matrices,
                                 incident_gradient, incident_normal_derivative,
                                 incident_potential, radiation_coefficient, solve_dispersion)


def _residual(w, h, k, g=GRAVITY):
    return abs(w * w - g * k * math.tanh(k * h)) / (w * w)


def test_reference_wavelength():
    w = 2 * math.pi / 1.2
    k = solve_dispersion(w, 2.5)
    assert 2.23 <= 2 * math.pi / k <= 2.27
    assert 2 * math.pi / k == pytest.approx(2.24828254789, rel=1e-10)
    assert _residual(w, 2.5, k) < 1e-12


def test_dispersion_fast():
    w = 2 * math.pi / 1.2
    n = 200
    t = time.perf_counter()
    for _ in range(n):
        solve_dispersion(w, 2.5)
    assert (time.perf_counter() - t) / n < 1e-3


def test_deep_water_limit():
    for w in (6.0, 10.0, 20.0):
        k = solve_dispersion(w, 10.0)
        assert k * 10.0 > 10
        assert k == pytest.approx(w * w / GRAVITY, rel=1e-9)


def test_shallow_water_limit():
    w, h = 0.01, 1.0
    k = solve_dispersion(w, h)
    assert k == pytest.approx(w / math.sqrt(GRAVITY * h), rel=1e-4)


def test_monotone_in_omega():
    ks = [solve_dispersion(w, 2.5) for w in np.linspace(0.2, 15, 60)]
    assert np.all(np.diff(ks) > 0)


@pytest.mark.parametrize("args", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_dispersion_rejects(args):
    with pytest.raises(ValueError):
        solve_dispersion(*args)


@settings(max_examples=200, deadline=None)
@given(w=st.floats(1e-3, 60.0), h=st.floats(1e-2, 1e3))
def test_property_dispersion_residual(w, h):
    k = solve_dispersion(w, h)
    assert k > 0
    assert _residual(w, h, k) < 1e-12


def test_environment():
    env = WaveEnvironment.from_period(1.2)
    assert env.omega == pytest.approx(2 * math.pi / 1.2)
    assert env.wavelength == pytest.approx(2 * math.pi / env.k)
    assert env.with_amplitude(2.0).amplitude == 2.0
    assert env.with_amplitude(2.0).k == env.k
    for bad in (dict(omega=-1.0), dict(omega=1.0, amplitude=-1), dict(omega=1.0, direction=0)):
        with pytest.raises(ValueError):
            WaveEnvironment(**bad)


@pytest.fixture(params=[1, -1])
def env_dir(request):
    return WaveEnvironment.from_period(1.2, depth=2.5, amplitude=0.7, direction=request.param)


def test_incident_laplace(env_dir):
    d = 1e-3
    x = np.linspace(-3, 3, 7)
    z = np.linspace(-2.2, -0.3, 7)
    X, Z = np.meshgrid(x, z)
    f = lambda a, b: incident_potential(env_dir, a, b)
    lap = (f(X + d, Z) + f(X - d, Z) + f(X, Z + d) + f(X, Z - d) - 4 * f(X, Z)) / d ** 2
    scale = np.abs(f(X, Z)).max() * env_dir.k ** 2
    assert np.abs(lap).max() < 1e-5 * scale


def test_incident_boundary_conditions(env_dir):
    e = env_dir
    x = np.linspace(-3, 3, 11)
    phi0 = incident_potential(e, x, 0.0)
    _, phiz0 = incident_gradient(e, x, 0.0)
    # linearized free-surface condition
    assert np.allclose(-e.omega ** 2 * phi0 + e.g * phiz0, 0, atol=1e-12 * e.g * np.abs(phiz0).max())
    _, phiz_b = incident_gradient(e, x, -e.depth)
    assert np.abs(phiz_b).max() < 1e-14 * np.abs(phiz0).max()
    # surface elevation amplitude
    eta = -1j * e.omega / e.g * phi0
    assert np.allclose(np.abs(eta), e.amplitude)


def test_incident_gradient_matches_fd(env_dir):
    d = 1e-6
    x, z = 0.37, -0.81
    gx, gz = incident_gradient(env_dir, x, z)
    f = lambda a, b: incident_potential(env_dir, a, b)
    assert gx == pytest.approx((f(x + d, z) - f(x - d, z)) / (2 * d), rel=1e-7)
    assert gz == pytest.approx((f(x, z + d) - f(x, z - d)) / (2 * d), rel=1e-7)
    n = np.array([0.6, -0.8])
    assert incident_normal_derivative(env_dir, x, z, n) == pytest.approx(0.6 * gx - 0.8 * gz)


def test_incident_outgoing_at_downstream_line():
    env = WaveEnvironment.from_period(1.2)
    # direction +1 travels towards -x: outgoing through x = -L, normal (-1, 0)
    z = np.linspace(-2.5, 0, 9)
    dn = incident_normal_derivative(env, -4.0, z, np.array([-1.0, 0.0]))
    phi = incident_potential(env, -4.0, z)
    assert np.allclose(dn + radiation_coefficient(env) * phi, 0, atol=1e-12 * np.abs(dn).max())


def test_deep_profile_no_overflow():
    env = WaveEnvironment(omega=30.0, depth=500.0)
    assert np.all(np.isfinite(incident_potential(env, 0.0, np.array([0.0, -1.0, -500.0]))))


def test_body_matrices():
    r = 0.5
    b = RigidBody2D(RHO_WATER / 2, r)
    M, K = body_matrices(b)
    m = RHO_WATER * math.pi * r * r / 2
    assert np.allclose(M, np.diag([m, m, m * r * r / 2]))
    assert np.allclose(K, np.diag([0.0, 2 * RHO_WATER * GRAVITY * r, 0.0]))


def _submerged(r, heave=0.0, roll=0.0, n=20000):
    """Area and x-moment of the moved disk below z = 0 (polygon clipping)."""
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    x, z = r * np.cos(t), r * np.sin(t)
    c, s = math.cos(roll), math.sin(roll)
    x, z = c * x - s * z, s * x + c * z + heave
    pts = []
    for i in range(n):
        p, q = (x[i], z[i]), (x[(i + 1) % n], z[(i + 1) % n])
        if p[1] <= 0:
            pts.append(p)
        if (p[1] <= 0) != (q[1] <= 0):
            a = p[1] / (p[1] - q[1])
            pts.append((p[0] + a * (q[0] - p[0]), 0.0))
    P = np.array(pts)
    X, Z = P[:, 0], P[:, 1]
    X1, Z1 = np.roll(X, -1), np.roll(Z, -1)
    cr = X * Z1 - X1 * Z
    area = 0.5 * cr.sum()
    mx = (cr * (X + X1)).sum() / 6
    return abs(area), mx * np.sign(area)


def test_heave_stiffness_numerical_buoyancy():
    r, d = 0.5, 1e-4
    k_num = RHO_WATER * GRAVITY * (_submerged(r, -d)[0] - _submerged(r, d)[0]) / (2 * d)
    _, K = body_matrices(RigidBody2D(RHO_WATER / 2, r))
    assert k_num == pytest.approx(K[1, 1], rel=1e-6)


def test_roll_stiffness_centred_circle_zero():
    r, d = 0.5, 1e-2
    a0 = _submerged(r)[0]
    ap, mp = _submerged(r, roll=d)
    # rotation about the centre neither changes the displaced area nor moves
    # the centre of buoyancy off the vertical through the centre
    assert ap == pytest.approx(a0, rel=1e-12)
    assert abs(mp) < 1e-12
    _, K = body_matrices(RigidBody2D(RHO_WATER / 2, r))
    assert K[2, 2] == 0.0


def test_offset_reference_point_symmetric():
    b = RigidBody2D(RHO_WATER / 2, 0.5, ref_point=(0.1, -0.2))
    M, K = body_matrices(b)
    assert np.allclose(M, M.T) and np.allclose(K, K.T)
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_buoyancy_imbalance():
    with pytest.raises(BuoyancyImbalance):
        body_matrices(RigidBody2D(0.6 * RHO_WATER, 0.5))
