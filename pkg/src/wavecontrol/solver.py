"""
Monolithic state and adjoint solves.

The unknowns ``(phi, X[, eta])`` are stacked into one complex sparse system
``S y = b``. Body rows are divided by ``rho*g`` and displacement rows by
``rho*g`` so that all blocks are O(1); this changes the scaling of the raw
multipliers only, and :class:`AdjointSolution` reports them back in
physical form.

The factorized matrix is the symmetrically equilibrated ``D S D`` with
``D = |diag S|^(-1/2)``; the Hermite slope unknowns otherwise inflate the
condition number by more than an order of magnitude. Adjoints are always
solved with ``S^H`` of the same factorization, which makes reduced
gradients exact for the discrete cost.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InadmissibleControl, SingularSystem
from .fem import AssembledOperators, ControlTensors
from .geometry import BoundaryTag
from .physics import RigidBody2D, body_matrices, incident_potential

__all__ = [
    "EPS_CONTROL",
    "StateSolution",
    "AdjointSolution",
    "CoupledSystem",
    "build_system",
    "solve_state_pressure",
    "solve_state_membrane",
    "solve_state_plate",
    "solve_adjoint_pressure",
    "solve_adjoint_membrane",
    "solve_adjoint_plate",
    "tension_scale",
    "scattered_ratio",
]

log = logging.getLogger(__name__)

EPS_CONTROL = 1e-6
COND_WARN = 1e12

_STIFF_POWER = {"membrane": 2, "plate": 4}


@dataclass
class StateSolution:
    """Scattered potential, surface displacement and body motion.

    ``eta`` is ``None`` in pressure mode. ``X`` is ``(surge, heave, roll)``,
    zeros when the mesh has no body.
    """

    phi: np.ndarray
    eta: np.ndarray | None
    X: np.ndarray
    residual_norm: float
    mode: str


@dataclass
class AdjointSolution:
    lam: np.ndarray
    mu: np.ndarray | None
    Y: np.ndarray
    residual_norm: float


def tension_scale(ops: AssembledOperators, mode: str, length: float) -> float:
    """Physical stiffness per unit control: ``rho*g*length**p`` (p=2 or 4).

    Membrane tension is ``T = u * rho*g*length**2`` [N/m]; plate flexural
    rigidity is ``B = u * rho*g*length**4`` [N m].
    """
    env = ops.env
    return env.rho * env.g * length ** _STIFF_POWER[mode]


class CoupledSystem:
    """Factorized monolithic operator for one mode and one control value."""

    def __init__(self, ops, body, mode, tensors=None, u=None, v=None,
                 length=None, check_conditioning=True):
        self.ops, self.body, self.mode, self.tensors = ops, body, mode, tensors
        env = ops.env
        w, g, rho = env.omega, env.g, env.rho
        n = ops.n
        with_body = body is not None and ops.has_body
        self.with_body = with_body
        nx = 3 if with_body else 0
        ne = tensors.n_eta if mode != "pressure" else 0
        self.sizes = (n, nx, ne)
        self.offsets = np.cumsum((0, n, nx, ne))

        if mode == "pressure":
            Att = ops.A - (w * w / g) * (ops.C_f + ops.C_c) + ops.alpha * ops.C_e
        else:
            Att = ops.A - (w * w / g) * ops.C_f + ops.alpha * ops.C_e
        blocks = [[Att, None, None], [None, None, None], [None, None, None]]
        if with_body:
            M, K = body_matrices(body, rho, g)
            self.M, self.K = M, K
            Kg = sp.csr_matrix(ops.K_g)
            blocks[0][1] = -1j * w * Kg.T
            blocks[1][0] = (1j * w / g) * Kg
            blocks[1][1] = sp.csr_matrix((K - w * w * M) / (rho * g))
        if mode != "pressure":
            p = _STIFF_POWER[mode]
            self.length = length
            self.stiff_factor = length ** p
            Sm = self.stiff_factor * tensors.stiffness.contract(u) + tensors.mass.contract(v)
            blocks[0][2] = -1j * w * tensors.coupling
            blocks[2][0] = (1j * w / g) * tensors.coupling.T
            blocks[2][2] = Sm
            self.u = np.asarray(u, dtype=float)
            self.v = np.asarray(v, dtype=float)
        self._blocks = blocks
        blocks = [[b for b, s in zip(row, self.sizes) if s] for row, s0 in zip(blocks, self.sizes) if s0]
        self._fill_empty(blocks)
        self.S = sp.bmat(blocks, format="csc").astype(complex)
        diag = np.abs(self.S.diagonal())
        self.D = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
        Dm = sp.diags(self.D)
        try:
            self.lu = spla.splu((Dm @ self.S @ Dm).tocsc())
        except RuntimeError as exc:
            raise SingularSystem(f"{mode} system factorization failed: {exc}") from None
        self.cond_estimate = None
        if check_conditioning:
            self.cond_estimate = self._condition()
            if self.cond_estimate > COND_WARN:
                warnings.warn(f"{mode} system is ill-conditioned "
                              f"(cond1 ~ {self.cond_estimate:.2e}); near body resonance?",
                              RuntimeWarning, stacklevel=3)

    def _fixed_part(self):
        """COO of ``S`` without the control-dependent block (lazily built)."""
        if getattr(self, "_fixed", None) is None:
            S = self.S.tocoo()
            keep = np.ones(S.nnz, dtype=bool)
            if self.mode != "pressure":
                o = self.offsets[2]
                keep = ~((S.row >= o) & (S.col >= o))
            self._fixed = (S.row[keep], S.col[keep], S.data[keep].astype(np.clongdouble))
        return self._fixed

    def _matvec_ext(self, y):
        """``S y`` in extended precision, control block taken from the tensors."""
        rows, cols, data = self._fixed_part()
        out = np.zeros(len(y), dtype=np.clongdouble)
        np.add.at(out, rows, data * y[cols])
        if self.mode != "pressure":
            o = self.offsets[2]
            for T, w, f in ((self.tensors.stiffness, self.u, self.stiff_factor),
                            (self.tensors.mass, self.v, 1.0)):
                coef = (f * T.v).astype(np.longdouble) * w[T.k].astype(np.longdouble)
                np.add.at(out, o + T.i, coef * y[o + T.j])
        return out

    def _refine(self, y, b, steps):
        yl = y.astype(np.clongdouble)
        bl = np.asarray(b).astype(np.clongdouble)
        for _ in range(steps):
            r = (bl - self._matvec_ext(yl)).astype(complex)
            yl += (self.D * self.lu.solve(self.D * r)).astype(np.clongdouble)
        return yl.astype(complex)

    def _fill_empty(self, blocks):
        live = [s for s in self.sizes if s]
        for i, row in enumerate(blocks):
            for j, b in enumerate(row):
                if b is None and i == j:
                    row[j] = sp.csr_matrix((live[i], live[j]))

    def _condition(self):
        N = self.S.shape[0]
        inv = spla.LinearOperator((N, N), matvec=lambda x: self.lu.solve(np.asarray(x, complex)),
                                  rmatvec=lambda x: self.lu.solve(np.asarray(x, complex), trans="H"),
                                  dtype=complex)
        Dm = sp.diags(self.D)
        try:
            ninv = spla.onenormest(inv, t=2)
        except Exception:  # estimator failures are not fatal
            return float("nan")
        # condition of the equilibrated matrix actually factorized
        return float(spla.norm(Dm @ self.S @ Dm, 1) * ninv)

    def split(self, y):
        o = self.offsets
        return y[o[0]:o[1]], y[o[1]:o[2]], y[o[2]:o[3]]

    def stack(self, phi, X=None, eta=None):
        y = np.zeros(self.offsets[-1], dtype=complex)
        o = self.offsets
        y[o[0]:o[1]] = phi
        if self.sizes[1] and X is not None:
            y[o[1]:o[2]] = X
        if self.sizes[2] and eta is not None:
            y[o[2]:o[3]] = eta
        return y

    def rhs(self, u=None):
        """Right-hand side; ``u`` is the complex pressure in pressure mode."""
        ops = self.ops
        env = ops.env
        w, g, rho = env.omega, env.g, env.rho
        phi = ops.f_g.copy()
        if self.mode == "pressure":
            if u is not None:
                phi -= 1j * w / (rho * g) * (ops.D_c @ np.asarray(u, dtype=complex))
        else:
            phi += ops.f_c
        X = -(1j * w / g) * ops.g if self.with_body else None
        eta = None
        if self.mode != "pressure":
            eta = -(1j * w / g) * self.tensors.incident_load(env)
        return self.stack(phi, X, eta)

    def solve(self, b, refine=0):
        """Solve ``S y = b``.

        ``refine > 0`` adds that many refinement steps with residuals formed
        in extended precision, so ``y`` depends smoothly on the controls down
        to roundoff; used by finite-difference checks.
        """
        y = self.D * self.lu.solve(self.D * b)
        if refine:
            y = self._refine(y, b, refine)
        return y, _relres(self.S @ y - b, b)

    def solve_adjoint(self, b):
        p = self.D * self.lu.solve(self.D * b, trans="H")
        return p, _relres(self.S.conj().T @ p - b, b)

    def adjoint_rhs(self, X, C):
        """``-[0, C X, 0]``: the cost-gradient load of the motion term."""
        b = np.zeros(self.offsets[-1], dtype=complex)
        if self.with_body:
            o = self.offsets
            b[o[1]:o[2]] = -(np.asarray(C) @ np.asarray(X))
        return b

    def state(self, y, residual):
        phi, X, eta = self.split(y)
        X = X.copy() if self.with_body else np.zeros(3, dtype=complex)
        return StateSolution(phi.copy(), eta.copy() if self.mode != "pressure" else None,
                             X, residual, self.mode)

    def adjoint(self, p, residual):
        env = self.ops.env
        lam, PX, Pe = self.split(p)
        scale = env.rho * env.g
        Y = PX / scale if self.with_body else np.zeros(3, dtype=complex)
        mu = Pe / scale if self.mode != "pressure" else None
        return AdjointSolution(lam.copy(), mu, Y, residual)


def _relres(r, b):
    nb = np.linalg.norm(b)
    nr = np.linalg.norm(r)
    return float(nr / nb) if nb > 0 else float(nr)


def check_admissible(u, v, eps=EPS_CONTROL):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    # bounds are inclusive; allow roundoff from projection
    tol = 1e-14
    if np.any(u < eps - tol) or np.any(v < eps - tol) or np.any(v > 1 - eps + tol):
        raise InadmissibleControl(
            f"controls outside the admissible box (min u={u.min():.3g}, "
            f"v in [{v.min():.3g}, {v.max():.3g}])")


def build_system(ops, body, mode, tensors=None, u=None, v=None, length=None,
                 check=True, check_conditioning=True) -> CoupledSystem:
    if mode == "pressure":
        return CoupledSystem(ops, body, mode, check_conditioning=check_conditioning)
    if mode not in _STIFF_POWER:
        raise ValueError(f"unknown mode {mode!r}")
    if check:
        check_admissible(u, v)
    if length is None:
        length = body.radius if body is not None else 1.0
    return CoupledSystem(ops, body, mode, tensors, u, v, length, check_conditioning)


def solve_state_pressure(ops: AssembledOperators, body: RigidBody2D | None, u=None,
                         system: CoupledSystem | None = None) -> StateSolution:
    """Pressure-controlled state; ``u`` is the complex surface pressure [Pa]."""
    system = system or build_system(ops, body, "pressure")
    y, res = system.solve(system.rhs(u))
    return system.state(y, res)


def solve_state_membrane(ops, tensors: ControlTensors, body, u, v, length=None,
                         check=True) -> StateSolution:
    """Membrane-covered state for dimensionless tension ``u`` and mass ``v``."""
    system = build_system(ops, body, "membrane", tensors, u, v, length, check)
    y, res = system.solve(system.rhs())
    return system.state(y, res)


def solve_state_plate(ops, tensors: ControlTensors, body, u, v, length=None,
                      check=True) -> StateSolution:
    """Plate-covered state for dimensionless rigidity ``u`` and mass ``v``."""
    system = build_system(ops, body, "plate", tensors, u, v, length, check)
    y, res = system.solve(system.rhs())
    return system.state(y, res)


def solve_adjoint_pressure(ops, body, X, C, system: CoupledSystem | None = None) -> AdjointSolution:
    system = system or build_system(ops, body, "pressure")
    p, res = system.solve_adjoint(system.adjoint_rhs(X, C))
    return system.adjoint(p, res)


def _solve_adjoint_passive(mode, ops, tensors, body, state, C, u, v, length=None,
                           system=None):
    system = system or build_system(ops, body, mode, tensors, u, v, length)
    p, res = system.solve_adjoint(system.adjoint_rhs(state.X, C))
    return system.adjoint(p, res)


def solve_adjoint_membrane(ops, tensors, body, state, C, u, v, length=None,
                           system=None) -> AdjointSolution:
    return _solve_adjoint_passive("membrane", ops, tensors, body, state, C, u, v,
                                  length, system)


def solve_adjoint_plate(ops, tensors, body, state, C, u, v, length=None,
                        system=None) -> AdjointSolution:
    return _solve_adjoint_passive("plate", ops, tensors, body, state, C, u, v,
                                  length, system)


def scattered_ratio(ops: AssembledOperators, phi_s, tag=BoundaryTag.FREE_SURFACE) -> float:
    """``||phi_s|| / ||phi_i||`` in the discrete L2 norm on the tagged surface."""
    C = ops.C_f if tag == BoundaryTag.FREE_SURFACE else ops.C_c
    xz = ops.space.coords
    phi_i = incident_potential(ops.env, xz[:, 0], xz[:, 1])
    num = np.real(np.vdot(phi_s, C @ phi_s))
    den = np.real(np.vdot(phi_i, C @ phi_i))
    return float(np.sqrt(max(num, 0.0) / den)) if den > 0 else float("nan")
