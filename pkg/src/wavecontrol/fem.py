"""
Finite element operators on the slice mesh.

Potential: continuous P2 on triangles. Controls: continuous P1 on the
control edges. Surface displacement: P2 (membrane, same nodes as the
potential trace) or C1 Hermite cubic (plate, value and slope per control
vertex). Mixed-basis matrices on the control surface share one Gauss rule
per edge.

Control-dependent operators are third-order tensors ``T[i, j, k]`` (two
displacement indices, one control index). They are kept as coordinate
triplets; :meth:`LineTensor.contract` forms ``sum_k T[:, :, k] u[k]`` and
:meth:`LineTensor.sensitivity` forms ``sum_ij conj(mu_i) T[i, j, k] eta_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyFailure
from .geometry import BoundaryTag, Mesh2D
from .physics import (WaveEnvironment, incident_normal_derivative,
                      incident_potential, radiation_coefficient)

__all__ = [
    "P2Space",
    "ControlSpace",
    "AssembledOperators",
    "LineTensor",
    "ControlTensors",
    "assemble",
    "assemble_membrane_tensors",
    "assemble_plate_tensor",
    "line_tensors",
    "dump_matrix",
]

# degree-4 Dunavant rule, barycentric coordinates, weights sum to one
_A, _WA = 0.445948490915965, 0.223381589678011
_B, _WB = 0.091576213509771, 0.109951743655322
TRI_BARY = np.array([
    [_A, _A, 1 - 2 * _A], [_A, 1 - 2 * _A, _A], [1 - 2 * _A, _A, _A],
    [_B, _B, 1 - 2 * _B], [_B, 1 - 2 * _B, _B], [1 - 2 * _B, _B, _B],
])
TRI_W = np.array([_WA] * 3 + [_WB] * 3)

N_EDGE_GAUSS = 7
_gx, _gw = np.polynomial.legendre.leggauss(N_EDGE_GAUSS)
EDGE_S = 0.5 * (_gx + 1.0)
EDGE_W = 0.5 * _gw

# local P2 numbering: vertices 0,1,2 then midpoints of (0,1), (1,2), (2,0)
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


def p2_edge_basis(s):
    """P2 trace basis on an edge, ordered (start, end, midpoint)."""
    s = np.asarray(s, dtype=float)
    return np.stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])


def p2_edge_dbasis(s):
    """d/ds of :func:`p2_edge_basis` on the unit parameter interval."""
    s = np.asarray(s, dtype=float)
    return np.stack([4 * s - 3, 4 * s - 1, 4 - 8 * s])


def p1_edge_basis(s):
    s = np.asarray(s, dtype=float)
    return np.stack([1 - s, s])


def p1_edge_dbasis(s):
    s = np.asarray(s, dtype=float)
    return np.stack([-np.ones_like(s), np.ones_like(s)])


def hermite_basis(s, h):
    """Cubic Hermite basis (w0, slope0, w1, slope1) on an edge of length h."""
    s = np.asarray(s, dtype=float)
    return np.stack([
        1 - 3 * s ** 2 + 2 * s ** 3,
        h * (s - 2 * s ** 2 + s ** 3),
        3 * s ** 2 - 2 * s ** 3,
        h * (-s ** 2 + s ** 3),
    ])


def hermite_d2basis(s, h):
    """Second x-derivatives of :func:`hermite_basis`."""
    s = np.asarray(s, dtype=float)
    return np.stack([
        (-6 + 12 * s) / h ** 2,
        (-4 + 6 * s) / h,
        (6 - 12 * s) / h ** 2,
        (-2 + 6 * s) / h,
    ])


class P2Space:
    """Global numbering of the continuous P2 space on ``mesh``.

    Vertex DOFs keep the mesh vertex numbers; midpoint DOFs follow, ordered
    by sorted vertex pair.
    """

    def __init__(self, mesh: Mesh2D):
        self.mesh = mesh
        tris = mesh.triangles
        nv = mesh.n_vertices
        pairs = np.vstack([tris[:, list(e)] for e in _P2_EDGES])
        key = np.sort(pairs, axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.ravel()
        nt = len(tris)
        mids = nv + inv.reshape(3, nt).T
        self.cell_dofs = np.hstack([tris, mids])
        self.n_dofs = nv + len(uniq)
        self._edge_index = {tuple(p): nv + i for i, p in enumerate(uniq.tolist())}
        coords = np.empty((self.n_dofs, 2))
        coords[:nv] = mesh.vertices
        coords[nv:] = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
        self.coords = coords

    def midpoint(self, a, b) -> int:
        return self._edge_index[(min(a, b), max(a, b))]

    def edge_dofs(self, edge_idx) -> np.ndarray:
        """(start, end, midpoint) DOFs of the given boundary edges."""
        e = self.mesh.boundary_edges[edge_idx]
        m = [self.midpoint(a, b) for a, b in e]
        return np.c_[e, np.asarray(m, dtype=np.int64)] if len(e) else np.zeros((0, 3), int)


class ControlSpace:
    """P1 functions on the control edges, nodes ordered by increasing x."""

    def __init__(self, mesh: Mesh2D):
        idx = mesh.edges_with(BoundaryTag.CONTROL_SURFACE)
        edges = mesh.boundary_edges[idx]
        verts = np.unique(edges)
        order = np.argsort(mesh.vertices[verts, 0], kind="stable")
        self.vertices = verts[order]
        self.x = mesh.vertices[self.vertices, 0]
        self.size = len(self.vertices)
        local = {int(v): i for i, v in enumerate(self.vertices)}
        loc = np.array([[local[int(a)], local[int(b)]] for a, b in edges], dtype=np.int64)
        swap = self.x[loc[:, 0]] > self.x[loc[:, 1]]
        loc[swap] = loc[swap][:, ::-1]
        edges = edges.copy()
        edges[swap] = edges[swap][:, ::-1]
        o = np.argsort(self.x[loc[:, 0]], kind="stable")
        self.edge_index = idx[o]  # boundary-edge ids, left-to-right
        self.edges = loc[o]  # local node pairs (left, right)
        self.mesh_edges = edges[o]  # mesh vertex pairs (left, right)
        self.lengths = self.x[self.edges[:, 1]] - self.x[self.edges[:, 0]]
        # interval label per node
        lab = np.zeros(self.size, dtype=np.int64)
        for i in range(1, self.size):
            joined = np.any((self.edges[:, 0] == i - 1) & (self.edges[:, 1] == i))
            lab[i] = lab[i - 1] + (0 if joined else 1)
        self.interval = lab


@dataclass(eq=False)
class AssembledOperators:
    """Discrete operators for one mesh and one wave environment.

    ``C_c``'s control-surface rows are kept even in passive modes, where the
    surface condition is carried by the displacement coupling instead.
    """

    space: P2Space
    control: ControlSpace
    env: WaveEnvironment
    alpha: complex
    A: sp.csr_matrix
    C_f: sp.csr_matrix
    C_c: sp.csr_matrix
    C_e: sp.csr_matrix
    D_c: sp.csr_matrix
    A_c: sp.csr_matrix
    E_c: sp.csr_matrix
    K_g: np.ndarray
    f_g: np.ndarray
    f_c: np.ndarray
    g: np.ndarray
    ref_point: tuple[float, float]

    @property
    def n(self) -> int:
        return self.space.n_dofs

    @property
    def mesh(self) -> Mesh2D:
        return self.space.mesh

    @property
    def has_body(self) -> bool:
        return self.mesh.has_body()

    def surface_dofs(self, tag: BoundaryTag) -> np.ndarray:
        idx = self.mesh.edges_with(tag)
        return np.unique(self.space.edge_dofs(idx))


def _grad_lambda(verts, tris):
    p = verts[tris]
    x, z = p[..., 0], p[..., 1]
    area2 = (x[:, 1] - x[:, 0]) * (z[:, 2] - z[:, 0]) - (x[:, 2] - x[:, 0]) * (z[:, 1] - z[:, 0])
    if np.any(np.abs(area2) < 2e-14):
        raise AssemblyFailure("degenerate triangle in assembly")
    g = np.empty((len(tris), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[:, i, 0] = (z[:, j] - z[:, k]) / area2
        g[:, i, 1] = (x[:, k] - x[:, j]) / area2
    return g, 0.5 * np.abs(area2)


def p2_stiffness_local(verts, tris):
    """Element stiffness matrices (nt, 6, 6) of the P2 Laplacian."""
    gl, area = _grad_lambda(verts, tris)
    Ke = np.zeros((len(tris), 6, 6))
    for lam, w in zip(TRI_BARY, TRI_W):
        grads = np.empty((len(tris), 6, 2))
        for i in range(3):
            grads[:, i] = (4 * lam[i] - 1) * gl[:, i]
        for m, (i, j) in enumerate(_P2_EDGES):
            grads[:, 3 + m] = 4 * (lam[j] * gl[:, i] + lam[i] * gl[:, j])
        Ke += w * np.einsum("eid,ejd->eij", grads, grads)
    return Ke * area[:, None, None]


def _coo(rows, cols, vals, shape, dtype=float):
    return sp.coo_matrix((np.asarray(vals, dtype=dtype).ravel(),
                          (np.asarray(rows).ravel(), np.asarray(cols).ravel())),
                         shape=shape).tocsr()


def _edge_geometry(mesh, edge_idx):
    e = mesh.boundary_edges[edge_idx]
    p0 = mesh.vertices[e[:, 0]]
    p1 = mesh.vertices[e[:, 1]]
    length = np.hypot(*(p1 - p0).T)
    pts = p0[:, None, :] + EDGE_S[None, :, None] * (p1 - p0)[:, None, :]
    return pts, length


def _boundary_mass(space, edge_idx):
    n = space.n_dofs
    if len(edge_idx) == 0:
        return sp.csr_matrix((n, n))
    dofs = space.edge_dofs(edge_idx)
    _, length = _edge_geometry(space.mesh, edge_idx)
    N = p2_edge_basis(EDGE_S)
    Me = np.einsum("q,aq,bq->ab", EDGE_W, N, N)
    vals = length[:, None, None] * Me[None]
    rows = np.repeat(dofs, 3, axis=1)
    cols = np.tile(dofs, (1, 3))
    return _coo(rows, cols, vals, (n, n))


def _boundary_load(space, edge_idx, values):
    """Vector ``int f * phi_i`` over edges, ``values`` sampled at EDGE_S points."""
    n = space.n_dofs
    out = np.zeros(n, dtype=complex)
    if len(edge_idx) == 0:
        return out
    dofs = space.edge_dofs(edge_idx)
    _, length = _edge_geometry(space.mesh, edge_idx)
    N = p2_edge_basis(EDGE_S)
    loc = np.einsum("q,aq,eq->ea", EDGE_W, N, values) * length[:, None]
    np.add.at(out, dofs.ravel(), loc.ravel())
    return out


def generalized_normal(points, normals, ref_point):
    """``{n} = (n_x, n_z, dx*n_z - dz*n_x)`` for counter-clockwise roll."""
    d = points - np.asarray(ref_point)
    return np.stack([normals[..., 0], normals[..., 1],
                     d[..., 0] * normals[..., 1] - d[..., 1] * normals[..., 0]], axis=-1)


def _control_matrices(space, control):
    """D_c (n x l), E_c and A_c (l x l) on the control edges."""
    n, l = space.n_dofs, control.size
    if l == 0:
        z = sp.csr_matrix((l, l))
        return sp.csr_matrix((n, l)), z, z
    h = control.lengths
    pdofs = np.array([[a, b, space.midpoint(a, b)] for a, b in control.mesh_edges])
    N2 = p2_edge_basis(EDGE_S)
    N1 = p1_edge_basis(EDGE_S)
    De = np.einsum("q,aq,kq->ak", EDGE_W, N2, N1)
    D = _coo(np.repeat(pdofs, 2, axis=1), np.tile(control.edges, (1, 3)),
             h[:, None, None] * De[None], (n, l))
    Me = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6
    Ke = np.array([[1.0, -1.0], [-1.0, 1.0]])
    rows = np.repeat(control.edges, 2, axis=1)
    cols = np.tile(control.edges, (1, 2))
    E = _coo(rows, cols, h[:, None, None] * Me[None], (l, l))
    Ac = _coo(rows, cols, Ke[None] / h[:, None, None], (l, l))
    return D, E, Ac


def assemble(mesh: Mesh2D, env: WaveEnvironment,
             ref_point=(0.0, 0.0)) -> AssembledOperators:
    """Assemble every control-independent operator of the coupled problem.

    ``ref_point`` is the body reference point used in the generalized normal.
    """
    space = P2Space(mesh)
    n = space.n_dofs
    Ke = p2_stiffness_local(mesh.vertices, mesh.triangles)
    cd = space.cell_dofs
    A = _coo(np.repeat(cd, 6, axis=1), np.tile(cd, (1, 6)), Ke, (n, n))

    Cf = _boundary_mass(space, mesh.edges_with(BoundaryTag.FREE_SURFACE))
    Cc = _boundary_mass(space, mesh.edges_with(BoundaryTag.CONTROL_SURFACE))
    Ce = _boundary_mass(space, mesh.edges_with(BoundaryTag.TRUNCATION))

    body = mesh.edges_with(BoundaryTag.BODY)
    pts, length = _edge_geometry(mesh, body)
    normals = mesh.edge_normals[body]
    Kg = np.zeros((3, n))
    f_g = np.zeros(n, dtype=complex)
    gvec = np.zeros(3, dtype=complex)
    if len(body):
        nrm = np.broadcast_to(normals[:, None, :], pts.shape)
        gn = generalized_normal(pts, nrm, ref_point)  # (ne, q, 3)
        dofs = space.edge_dofs(body)
        N = p2_edge_basis(EDGE_S)
        loc = np.einsum("q,eqi,aq->eia", EDGE_W, gn, N) * length[:, None, None]
        for i in range(3):
            np.add.at(Kg[i], dofs.ravel(), loc[:, i, :].ravel())
        dphi = incident_normal_derivative(env, pts[..., 0], pts[..., 1], nrm)
        f_g = -_boundary_load(space, body, dphi)
        phi = incident_potential(env, pts[..., 0], pts[..., 1])
        gvec = np.einsum("q,eq,eqi->i", EDGE_W, phi * length[:, None], gn)

    ctrl = mesh.edges_with(BoundaryTag.CONTROL_SURFACE)
    pts, _ = _edge_geometry(mesh, ctrl)
    nrm = np.broadcast_to(mesh.edge_normals[ctrl][:, None, :], pts.shape)
    f_c = -_boundary_load(space, ctrl,
                          incident_normal_derivative(env, pts[..., 0], pts[..., 1], nrm))

    control = ControlSpace(mesh)
    D, E, Ac = _control_matrices(space, control)
    return AssembledOperators(space, control, env, radiation_coefficient(env),
                              A, Cf, Cc, Ce, D, Ac, E, Kg, f_g, f_c, gvec,
                              tuple(ref_point))


class LineTensor:
    """Sparse third-order tensor ``T[i, j, k]`` stored as triplets."""

    def __init__(self, rows, cols, ks, vals, n_state, n_control):
        key = (np.asarray(ks, np.int64) * n_state + rows) * n_state + cols
        uniq, inv = np.unique(key, return_inverse=True)
        v = np.zeros(len(uniq))
        np.add.at(v, inv.ravel(), np.asarray(vals, float).ravel())
        self.k, rem = np.divmod(uniq, n_state * n_state)
        self.i, self.j = np.divmod(rem, n_state)
        self.v = v
        self.n_state = n_state
        self.n_control = n_control

    def contract(self, u) -> sp.csr_matrix:
        """Matrix ``sum_k T[:, :, k] * u[k]``."""
        u = np.asarray(u, dtype=float)
        return sp.coo_matrix((self.v * u[self.k], (self.i, self.j)),
                             shape=(self.n_state, self.n_state)).tocsr()

    def sensitivity(self, mu, eta) -> np.ndarray:
        """``s[k] = sum_ij conj(mu[i]) T[i, j, k] eta[j]`` (complex)."""
        terms = np.conj(mu)[self.i] * self.v * eta[self.j]
        return (np.bincount(self.k, terms.real, self.n_control)
                + 1j * np.bincount(self.k, terms.imag, self.n_control))

    def slice(self, k) -> sp.csr_matrix:
        m = self.k == k
        return sp.coo_matrix((self.v[m], (self.i[m], self.j[m])),
                             shape=(self.n_state, self.n_state)).tocsr()


@dataclass(eq=False)
class ControlTensors:
    """Displacement space on the control surface and its operators.

    ``stiffness`` is the tension (membrane) or bending (plate) tensor,
    ``mass`` the surface mass tensor; ``coupling`` (n x m) holds
    ``int phi_i N_l`` between the potential and displacement bases.
    ``quad_points``/``quad_weights``/``quad_basis`` allow integrating
    arbitrary surface loads against the displacement basis.
    """

    kind: str
    n_eta: int
    stiffness: LineTensor
    mass: LineTensor
    coupling: sp.csr_matrix
    node_x: np.ndarray
    value_dofs: np.ndarray
    quad_points: np.ndarray
    quad_weights: np.ndarray
    quad_basis: np.ndarray
    quad_dofs: np.ndarray
    potential_dofs: np.ndarray | None = None
    evaluator: object = None

    def load(self, values) -> np.ndarray:
        """``int f N_l`` with ``f`` sampled at :attr:`quad_points` (ne, q)."""
        loc = np.einsum("eq,eq,eaq->ea", self.quad_weights, values, self.quad_basis)
        out = np.zeros(self.n_eta, dtype=complex)
        np.add.at(out, self.quad_dofs.ravel(), loc.ravel())
        return out

    def incident_load(self, env: WaveEnvironment) -> np.ndarray:
        p = self.quad_points
        return self.load(incident_potential(env, p[..., 0], p[..., 1]))

    def values(self, eta) -> np.ndarray:
        """Nodal displacement values at :attr:`node_x`."""
        return np.asarray(eta)[self.value_dofs]

    def evaluate(self, eta, x) -> np.ndarray:
        """Displacement field at abscissae ``x`` (must lie on the surface)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.evaluator(np.asarray(eta), x)


def line_tensors(node_x, edges, kind):
    """Tensors of a 1D chain of control edges (reference implementation).

    Parameters
    ----------
    node_x : array (l,)
        Control node abscissae.
    edges : array (ne, 2)
        Local (left, right) node pairs.
    kind : {'p1', 'p2', 'hermite'}
        Displacement basis.

    Returns
    -------
    stiffness, mass : LineTensor
    eta_dofs : array (ne, nb)
        Local displacement DOFs per edge.
    n_eta : int
    """
    node_x = np.asarray(node_x, dtype=float)
    edges = np.asarray(edges, dtype=np.int64)
    l = len(node_x)
    h = node_x[edges[:, 1]] - node_x[edges[:, 0]]
    if np.any(h <= 0):
        raise AssemblyFailure("control edges must have positive length")
    psi = p1_edge_basis(EDGE_S)
    if kind == "p1":
        eta_dofs, n_eta = edges, l
        Nb = np.broadcast_to(p1_edge_basis(EDGE_S), (len(h), 2, len(EDGE_S)))
        dd = p1_edge_dbasis(EDGE_S)[None] / h[:, None, None]
    elif kind == "p2":
        eta_dofs = np.c_[edges, l + np.arange(len(h))]
        n_eta = l + len(h)
        Nb = np.broadcast_to(p2_edge_basis(EDGE_S), (len(h), 3, len(EDGE_S)))
        dd = p2_edge_dbasis(EDGE_S)[None] / h[:, None, None]
    elif kind == "hermite":
        eta_dofs = np.c_[2 * edges[:, 0], 2 * edges[:, 0] + 1,
                         2 * edges[:, 1], 2 * edges[:, 1] + 1]
        n_eta = 2 * l
        Nb = np.stack([hermite_basis(EDGE_S, hi) for hi in h])
        dd = np.stack([hermite_d2basis(EDGE_S, hi) for hi in h])
    else:
        raise ValueError(f"unknown displacement basis {kind!r}")
    wq = EDGE_W[None, :] * h[:, None]
    S = np.einsum("eq,eaq,ebq,kq->eabk", wq, dd, dd, psi)
    M = np.einsum("eq,eaq,ebq,kq->eabk", wq, Nb, Nb, psi)
    nb = eta_dofs.shape[1]
    I = np.broadcast_to(eta_dofs[:, :, None, None], S.shape)
    J = np.broadcast_to(eta_dofs[:, None, :, None], S.shape)
    K = np.broadcast_to(edges[:, None, None, :], S.shape)
    assert S.shape[1:] == (nb, nb, 2)
    return (LineTensor(I.ravel(), J.ravel(), K.ravel(), S.ravel(), n_eta, l),
            LineTensor(I.ravel(), J.ravel(), K.ravel(), M.ravel(), n_eta, l),
            eta_dofs, n_eta)


def _surface_tensors(ops_or_mesh, kind):
    space = ops_or_mesh.space if isinstance(ops_or_mesh, AssembledOperators) else P2Space(ops_or_mesh)
    mesh = space.mesh
    control = ControlSpace(mesh)
    stiff, mass, eta_dofs, n_eta = line_tensors(control.x, control.edges, kind)
    h = control.lengths
    ne = len(h)
    n = space.n_dofs
    pdofs = np.array([[a, b, space.midpoint(a, b)] for a, b in control.mesh_edges],
                     dtype=np.int64).reshape(-1, 3)
    x0 = control.x[control.edges[:, 0]]
    qx = x0[:, None] + EDGE_S[None, :] * h[:, None]
    qpts = np.stack([qx, np.zeros_like(qx)], axis=-1)
    qw = EDGE_W[None, :] * h[:, None]
    if kind == "p2":
        basis = np.broadcast_to(p2_edge_basis(EDGE_S), (ne, 3, len(EDGE_S)))
        # displacement DOF l <-> potential DOF: vertices then midpoints
        pot_of_eta = np.concatenate([control.vertices, pdofs[:, 2]])
        value_dofs = np.arange(control.size)
    else:
        basis = np.stack([hermite_basis(EDGE_S, hi) for hi in h]) if ne else np.zeros((0, 4, len(EDGE_S)))
        pot_of_eta = None
        value_dofs = 2 * np.arange(control.size)
    N2 = p2_edge_basis(EDGE_S)
    Ce = np.einsum("eq,aq,ebq->eab", qw, N2, basis)
    nb = basis.shape[1]
    coupling = _coo(np.repeat(pdofs, nb, axis=1), np.tile(eta_dofs, (1, 3)), Ce, (n, n_eta))
    return ControlTensors(kind, n_eta, stiff, mass, coupling, control.x, value_dofs,
                          qpts, qw, basis, eta_dofs, pot_of_eta,
                          _make_evaluator(control, eta_dofs, kind))


def _make_evaluator(control, eta_dofs, kind):
    x0 = control.x[control.edges[:, 0]]
    x1 = control.x[control.edges[:, 1]]

    def evaluate(eta, x):
        e = np.searchsorted(x1, x, side="left")
        e = np.clip(e, 0, len(x0) - 1)
        if np.any((x < x0[e] - 1e-12) | (x > x1[e] + 1e-12)):
            raise ValueError("evaluation point outside the control surface")
        h = x1[e] - x0[e]
        s = (x - x0[e]) / h
        if kind == "p2":
            B = p2_edge_basis(s)
        else:
            B = hermite_basis(s, h)
        return np.einsum("ae,ea->e", B, eta[eta_dofs[e]])

    return evaluate


def assemble_membrane_tensors(mesh_or_ops) -> ControlTensors:
    """Tension and mass tensors with P2 displacement (potential-trace nodes)."""
    return _surface_tensors(mesh_or_ops, "p2")


def assemble_plate_tensor(mesh_or_ops) -> ControlTensors:
    """Bending and mass tensors with C1 Hermite displacement."""
    return _surface_tensors(mesh_or_ops, "hermite")


def dump_matrix(matrix, path) -> None:
    """Coordinate text dump, one ``i j value`` line per stored entry (1-based)."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    with open(path, "w", encoding="ascii") as fh:
        for i, j, v in zip(m.row[order], m.col[order], m.data[order]):
            if np.iscomplexobj(m.data):
                fh.write(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
