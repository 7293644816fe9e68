"""
Optimal control of the floating body's motion.

Active pressure control is linear-quadratic and solved in one shot from
its KKT system. The passive membrane and plate problems are bilinear and
solved by projected gradient descent with Armijo backtracking, using
adjoint-based reduced gradients.

Gradients are "real" gradients: for a complex control ``u`` the returned
``G`` satisfies ``dJ = Re(G^H du)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InadmissibleInitialControl, SingularKKT
from .fem import AssembledOperators, ControlTensors
from .physics import RigidBody2D
from .solver import (EPS_CONTROL, InadmissibleControl, StateSolution, build_system,
                     check_admissible)

__all__ = [
    "CostConfig",
    "ControlField",
    "OCPResult",
    "PGOptions",
    "cost",
    "motion_term",
    "solve_pressure_iterative",
    "PressureProblem",
    "PassiveProblem",
    "solve_lq_pressure",
    "solve_passive",
    "projected_gradient",
    "fd_gradient_check",
    "GradientCheckReport",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostConfig:
    """Weights of the cost ``1/2 X^H C X + 1/2 ||u||^2 (+ 1/2 ||v||^2)``.

    ``C`` defaults to ``diag(1, 1, H**2)``.
    """

    alpha_u: float = 1e-10
    beta_u: float = 1e-10
    alpha_v: float = 1e-4
    beta_v: float = 4e-2
    height: float = 1.0
    C: np.ndarray | None = None

    def __post_init__(self):
        for name in ("alpha_u", "beta_u", "alpha_v", "beta_v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        C = self.C
        if C is None:
            C = np.diag([1.0, 1.0, self.height ** 2])
        C = np.asarray(C, dtype=float)
        if C.shape != (3, 3) or not np.allclose(C, C.T):
            raise ValueError("C must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(C).min() <= 0:
            raise ValueError("C must be positive definite")
        object.__setattr__(self, "C", C)

    def weights_u(self, ops) -> sp.csr_matrix:
        return (self.alpha_u * ops.E_c + self.beta_u * ops.A_c).tocsr()

    def weights_v(self, ops) -> sp.csr_matrix:
        return (self.alpha_v * ops.E_c + self.beta_v * ops.A_c).tocsr()


@dataclass
class ControlField:
    """Nodal control values on the control surface with box bounds."""

    values: np.ndarray
    lower: np.ndarray | float = -np.inf
    upper: np.ndarray | float = np.inf

    @classmethod
    def tension(cls, values, eps=EPS_CONTROL):
        return cls(np.asarray(values, dtype=float), eps, np.inf)

    @classmethod
    def mass(cls, values, eps=EPS_CONTROL):
        return cls(np.asarray(values, dtype=float), eps, 1 - eps)

    def admissible(self) -> bool:
        return bool(np.all(self.values >= self.lower) and np.all(self.values <= self.upper))


def motion_term(X, C) -> float:
    X = np.asarray(X)
    return 0.5 * float(np.real(np.conj(X) @ (np.asarray(C) @ X)))


def _quad(R, u) -> float:
    return float(np.real(np.vdot(u, R @ u)))


def cost(X, cfg: CostConfig, ops: AssembledOperators, u=None, v=None):
    """Return ``(J, motion_term)`` for body motion ``X`` and controls."""
    m = motion_term(X, cfg.C)
    J = m
    if u is not None:
        J += 0.5 * _quad(cfg.weights_u(ops), np.asarray(u))
    if v is not None:
        J += 0.5 * _quad(cfg.weights_v(ops), np.asarray(v))
    return J, m


@dataclass
class OCPResult:
    mode: str
    u: np.ndarray
    v: np.ndarray | None
    state: StateSolution
    J: float
    motion: float
    J_history: list = field(default_factory=list)
    motion_history: list = field(default_factory=list)
    pg_history: list = field(default_factory=list)
    termination: str = "converged"
    iterations: int = 0
    kkt_residual: float | None = None


# ----------------------------------------------------------------------------
# reduced problems
# ----------------------------------------------------------------------------

class PressureProblem:
    """Reduced LQ cost of the pressure control; one factorization for all u."""

    mode = "pressure"

    def __init__(self, ops: AssembledOperators, body: RigidBody2D | None, cfg: CostConfig):
        self.ops, self.body, self.cfg = ops, body, cfg
        self.system = build_system(ops, body, "pressure")
        self.R = cfg.weights_u(ops)
        env = ops.env
        self.b_scale = env.omega / (env.rho * env.g)
        self.refine = 0

    @property
    def size(self) -> int:
        return self.ops.control.size

    def state(self, u) -> StateSolution:
        y, res = self.system.solve(self.system.rhs(u), refine=self.refine)
        return self.system.state(y, res)

    def value(self, u):
        st = self.state(u)
        J, m = cost(st.X, self.cfg, self.ops, u=u)
        return J, m, st

    def gradient(self, u, st=None):
        """Return ``(J, motion, G, state)`` with ``dJ = Re(G^H du)``."""
        u = np.asarray(u, dtype=complex)
        st = st or self.state(u)
        J, m = cost(st.X, self.cfg, self.ops, u=u)
        p, _ = self.system.solve_adjoint(self.system.adjoint_rhs(st.X, self.cfg.C))
        lam = self.system.split(p)[0]
        G = self.R @ u - 1j * self.b_scale * (self.ops.D_c.T @ lam)
        return J, m, G, st

    # real-vector interface used by the optimizer and FD checks
    def pack(self, u):
        u = np.asarray(u, dtype=complex)
        return np.concatenate([u.real, u.imag])

    def unpack(self, x):
        l = self.size
        return x[:l] + 1j * x[l:]

    def real_value(self, x):
        return self.value(self.unpack(x))[0]

    def real_gradient(self, x):
        J, m, G, st = self.gradient(self.unpack(x))
        return J, self.pack(G)


class PassiveProblem:
    """Reduced cost of the membrane or plate problem in ``(u, v)``.

    ``u`` scales the stiffness (tension ``u*rho*g*length**2`` or rigidity
    ``u*rho*g*length**4``); ``v = 1 - omega**2 m / (g rho)``.
    """

    def __init__(self, mode, ops, tensors: ControlTensors, body, cfg: CostConfig,
                 length=None, eps=EPS_CONTROL):
        if mode not in ("membrane", "plate"):
            raise ValueError(f"unknown passive mode {mode!r}")
        self.mode, self.ops, self.tensors, self.body, self.cfg = mode, ops, tensors, body, cfg
        self.length = length if length is not None else (body.radius if body else 1.0)
        self.eps = eps
        self.Ru = cfg.weights_u(ops)
        self.Rv = cfg.weights_v(ops)
        self.n_solves = 0
        self.refine = 0

    @property
    def size(self) -> int:
        return self.ops.control.size

    def system(self, u, v, check=True):
        self.n_solves += 1
        return build_system(self.ops, self.body, self.mode, self.tensors, u, v,
                            self.length, check=check, check_conditioning=False)

    def value(self, u, v, check=True):
        sys_ = self.system(u, v, check)
        y, res = sys_.solve(sys_.rhs(), refine=self.refine)
        st = sys_.state(y, res)
        J = (motion_term(st.X, self.cfg.C) + 0.5 * _quad(self.Ru, u)
             + 0.5 * _quad(self.Rv, v))
        return J, motion_term(st.X, self.cfg.C), st, sys_

    def gradient(self, u, v, cached=None):
        """Return ``(J, motion, grad_u, grad_v, state)``."""
        J, m, st, sys_ = cached or self.value(u, v)
        p, _ = sys_.solve_adjoint(sys_.adjoint_rhs(st.X, self.cfg.C))
        pe = sys_.split(p)[2]
        gu = self.Ru @ u + sys_.stiff_factor * np.real(self.tensors.stiffness.sensitivity(pe, st.eta))
        gv = self.Rv @ v + np.real(self.tensors.mass.sensitivity(pe, st.eta))
        return J, m, gu, gv, st

    def bounds(self):
        l = self.size
        lo = np.concatenate([np.full(l, self.eps), np.full(l, self.eps)])
        hi = np.concatenate([np.full(l, np.inf), np.full(l, 1 - self.eps)])
        return lo, hi

    def pack(self, u, v):
        return np.concatenate([np.asarray(u, float), np.asarray(v, float)])

    def unpack(self, x):
        l = self.size
        return x[:l], x[l:]

    def real_value(self, x):
        u, v = self.unpack(x)
        return self.value(u, v, check=False)[0]

    def real_gradient(self, x):
        u, v = self.unpack(x)
        J, m, gu, gv, st = self.gradient(u, v, self.value(u, v, check=False))
        return J, self.pack(gu, gv)


# ----------------------------------------------------------------------------
# one-shot LQ solve
# ----------------------------------------------------------------------------

def solve_lq_pressure(ops: AssembledOperators, body: RigidBody2D | None,
                      cfg: CostConfig, verify=True) -> OCPResult:
    """Global minimizer of the pressure-control problem from its KKT system.

    Unknowns ``(y, p, u)`` with ``y = (phi, X)`` and ``p`` its adjoint::

        [ S    0     -B  ] [y]   [b]
        [ Q    S^H    0  ] [p] = [0]
        [ 0   -B^H    R  ] [u]   [0]

    The pressure is rescaled by ``rho*g*r`` inside the solve.
    """
    system = build_system(ops, body, "pressure")
    env = ops.env
    S = system.S
    N = S.shape[0]
    l = ops.control.size
    scale = env.rho * env.g * (body.radius if body is not None else 1.0)
    B = sp.vstack([-1j * env.omega / (env.rho * env.g) * ops.D_c,
                   sp.csr_matrix((N - ops.n, l))]).tocsr() * scale
    Q = sp.lil_matrix((N, N))
    if system.with_body:
        o = system.offsets
        Q[o[1]:o[2], o[1]:o[2]] = cfg.C
    R = cfg.weights_u(ops) * scale ** 2
    K = sp.bmat([
        [S, None, -B],
        [Q.tocsr(), S.conj().T, None],
        [None, -B.conj().T, R],
    ], format="csc").astype(complex)
    rhs = np.concatenate([system.rhs(), np.zeros(N + l, dtype=complex)])
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SingularKKT(f"KKT factorization failed: {exc}") from None
    z = lu.solve(rhs)
    nr = np.linalg.norm(rhs)
    kkt_res = float(np.linalg.norm(K @ z - rhs) / nr) if nr > 0 else float(np.linalg.norm(K @ z))
    u = z[2 * N:] * scale
    y = z[:N]
    st = system.state(y, float(np.linalg.norm(S @ y - system.rhs(u)) / max(nr, 1e-300)))
    J, m = cost(st.X, cfg, ops, u=u)
    if verify:
        y2, _ = system.solve(system.rhs(u))
        J2, _ = cost(system.state(y2, 0.0).X, cfg, ops, u=u)
        if J > 0 and abs(J2 - J) > 1e-10 * J:
            log.warning("KKT cost %.12e differs from forward solve %.12e", J, J2)
    return OCPResult("pressure", u, None, st, J, m, [J], [m], [0.0], "converged", 1,
                     kkt_residual=kkt_res)


# ----------------------------------------------------------------------------
# projected gradient
# ----------------------------------------------------------------------------

@dataclass
class PGOptions:
    tol_rel: float = 1e-6
    tol_abs: float = 1e-12
    max_iter: int = 500
    c1: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 40
    first_step: float = 0.1
    step_min: float = 1e-12
    step_max: float = 1e12


def projected_gradient(value, gradient, x0, lower, upper, options=PGOptions(),
                       metric=None, callback=None, record=None):
    """Monotone projected gradient with Barzilai-Borwein trial steps.

    Parameters
    ----------
    value : callable
        ``value(x) -> (f, cache)``; ``cache`` is passed back to ``gradient``.
    gradient : callable
        ``gradient(x, cache) -> g`` with ``g`` the Euclidean gradient.
    lower, upper : array
        Box bounds (``+-inf`` allowed).
    metric : (apply_inverse, apply) pair, optional
        Inner product in which steps are taken. Must be diagonal when any
        bound is finite so that clipping stays the metric projection.
    record : callable, optional
        ``record(cache)`` -> scalar stored in the history (caches themselves
        are not kept; they may hold factorizations).

    Returns
    -------
    x, f, cache, history, termination
        ``history`` holds ``(f, pg_norm, record(cache))`` per iterate.
        ``termination`` is ``converged``, ``max_iter``, ``roundoff`` (no
        decrease is resolvable in floating point) or ``line_search_failure``.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    Minv, Mapply = metric if metric is not None else (lambda g: g, lambda d: d)

    def proj(x):
        return np.minimum(np.maximum(x, lo), hi)

    def mnorm(d):
        return float(np.sqrt(max(np.dot(d, Mapply(d)), 0.0)))

    x = proj(np.asarray(x0, dtype=float))
    f, cache = value(x)
    g = gradient(x, cache)
    d = Minv(g)
    pg = mnorm(proj(x - d) - x)
    rec = record or (lambda c: None)
    history = [(f, pg, rec(cache))]
    target = options.tol_rel * pg + options.tol_abs
    step = options.first_step / max(np.max(np.abs(d)), 1e-300)
    termination = "max_iter"
    x_prev = g_prev = None
    last_step = step
    for it in range(options.max_iter):
        if pg <= target:
            termination = "converged"
            break
        if x_prev is not None:
            s, yv = x - x_prev, g - g_prev
            sy = float(np.dot(s, yv))
            # negative curvature (nonconvex problems): retry the last step enlarged
            step = float(np.dot(s, Mapply(s))) / sy if sy > 0 else 4 * last_step
            step = min(max(step, options.step_min), options.step_max)
        accepted = False
        dec0 = None
        for _ in range(options.max_backtracks):
            xt = proj(x - step * d)
            dec = float(np.dot(g, xt - x))
            if dec < 0:
                dec0 = dec if dec0 is None else dec0
                ft, ct = value(xt)
                if ft <= f + options.c1 * dec and ft < f:
                    accepted = True
                    break
            step *= options.shrink
        if not accepted:
            # predicted decrease below the rounding level of f: stationary to working precision
            small = dec0 is not None and -dec0 <= 64 * np.finfo(float).eps * max(abs(f), 1e-300)
            termination = "roundoff" if small else "line_search_failure"
            break
        last_step = step
        x_prev, g_prev = x, g
        x, f, cache = xt, ft, ct
        g = gradient(x, cache)
        d = Minv(g)
        pg = mnorm(proj(x - d) - x)
        history.append((f, pg, rec(cache)))
        if callback is not None:
            callback(it + 1, x, f, pg)
    else:
        if pg <= target:
            termination = "converged"
    return x, f, cache, history, termination


def solve_passive(mode, ops, tensors, body, cfg: CostConfig, u0=None, v0=None,
                  options: PGOptions = PGOptions(), length=None, callback=None) -> OCPResult:
    """Optimize membrane or plate properties by projected gradient.

    Defaults: ``u0 = 1`` (unit dimensionless stiffness), ``v0 = 0.5``.
    Steps are measured in the lumped control-surface mass metric.
    """
    prob = PassiveProblem(mode, ops, tensors, body, cfg, length)
    l = prob.size
    u0 = np.full(l, 1.0) if u0 is None else np.asarray(u0, dtype=float)
    v0 = np.full(l, 0.5) if v0 is None else np.asarray(v0, dtype=float)
    try:
        check_admissible(u0, v0, prob.eps)
    except InadmissibleControl as exc:
        raise InadmissibleInitialControl(str(exc)) from None
    lumped = np.asarray(ops.E_c.sum(axis=1)).ravel()
    w = np.concatenate([lumped, lumped])
    metric = (lambda gr: gr / w, lambda d: d * w)

    def value(x):
        u, v = prob.unpack(x)
        out = prob.value(u, v, check=False)
        return out[0], out

    def gradient(x, cache):
        u, v = prob.unpack(x)
        _, _, gu, gv, _ = prob.gradient(u, v, cache)
        return prob.pack(gu, gv)

    lo, hi = prob.bounds()
    x, f, last, hist, term = projected_gradient(value, gradient, prob.pack(u0, v0), lo, hi,
                                                options, metric, callback,
                                                record=lambda c: c[1])
    u, v = prob.unpack(x)
    return OCPResult(mode, u, v, last[2], f, last[1],
                     [h[0] for h in hist], [h[2] for h in hist],
                     [h[1] for h in hist], term, len(hist) - 1)


def solve_pressure_iterative(ops, body, cfg: CostConfig, options: PGOptions = PGOptions(),
                             u0=None) -> OCPResult:
    """Gradient-based solution of the LQ problem (cross-check of the KKT solve).

    Steps are taken in the control-norm metric ``alpha E + beta A``.
    """
    prob = PressureProblem(ops, body, cfg)
    l = prob.size
    Rlu = spla.splu(prob.R.tocsc())

    def minv(gr):
        return np.concatenate([Rlu.solve(gr[:l]), Rlu.solve(gr[l:])])

    def mapply(d):
        return np.concatenate([prob.R @ d[:l], prob.R @ d[l:]])

    def value(x):
        J, m, st = prob.value(prob.unpack(x))
        return J, (J, m, st)

    def gradient(x, cache):
        _, _, G, _ = prob.gradient(prob.unpack(x), cache[2])
        return prob.pack(G)

    x0 = np.zeros(2 * l) if u0 is None else prob.pack(u0)
    inf = np.full(2 * l, np.inf)
    opts = options
    x, f, last, hist, term = projected_gradient(value, gradient, x0, -inf, inf, opts,
                                                (minv, mapply), record=lambda c: c[1])
    return OCPResult("pressure", prob.unpack(x), None, last[2], f, last[1],
                     [h[0] for h in hist], [h[2] for h in hist],
                     [h[1] for h in hist], term, len(hist) - 1)


# ----------------------------------------------------------------------------
# gradient verification
# ----------------------------------------------------------------------------

@dataclass
class GradientCheckReport:
    mode: str
    steps: np.ndarray
    adjoint: np.ndarray  # directional derivatives, one per direction
    errors: np.ndarray  # (n_directions, n_steps) relative errors

    @property
    def min_errors(self) -> np.ndarray:
        return self.errors.min(axis=1)

    def passed(self, tol=1e-6) -> bool:
        return bool(np.all(self.min_errors < tol))

    def __str__(self):
        lines = [f"gradient check ({self.mode}), steps {self.steps[0]:.0e}..{self.steps[-1]:.0e}"]
        for i, (a, e) in enumerate(zip(self.adjoint, self.min_errors)):
            lines.append(f"  direction {i}: dJ = {a:+.6e}, min rel. error {e:.3e}")
        return "\n".join(lines)


def fd_gradient_check(problem, point, n_directions=5, steps=None, seed=0, scale=None,
                      refine=1):
    """Compare adjoint directional derivatives with central differences.

    ``problem`` is a :class:`PressureProblem` or :class:`PassiveProblem`;
    ``point`` its packed real control vector. Directions are random with
    max-norm ``scale`` (default: 1 for passive controls, ``rho*g*A`` for
    pressure); each is checked over the whole step sweep. Cost values are
    computed with ``refine`` extended-precision refinement steps so that
    solver roundoff does not swamp the small differences.
    """
    steps = np.asarray(steps if steps is not None else 10.0 ** -np.arange(3, 8), dtype=float)
    x = np.asarray(point, dtype=float)
    rng = np.random.default_rng(seed)
    if scale is None:
        env = problem.ops.env
        scale = 1.0 if isinstance(problem, PassiveProblem) else env.rho * env.g * max(env.amplitude, 1e-300)
    if isinstance(problem, PassiveProblem):
        lo, hi = problem.bounds()
        margin = np.minimum(x - lo, hi - x).min()
        if margin < 10 * steps.max():
            raise InadmissibleControl("gradient check point too close to the bounds")
    _, g = problem.real_gradient(x)
    adj, errs = [], []
    saved = problem.refine
    problem.refine = refine
    try:
        for _ in range(n_directions):
            d = rng.standard_normal(x.size)
            d *= scale / np.abs(d).max()
            dd = float(g @ d)
            row = []
            for t in steps:
                fd = (problem.real_value(x + t * d) - problem.real_value(x - t * d)) / (2 * t)
                row.append(abs(fd - dd) / max(abs(dd), 1e-300))
            adj.append(dd)
            errs.append(row)
    finally:
        problem.refine = saved
    return GradientCheckReport(getattr(problem, "mode", "pressure"), steps,
                               np.array(adj), np.array(errs))
