"""
Vertical-slice (x-z) meshes for the floating-body problem.

The fluid region is the rectangle ``[-L, L] x [-h0, 0]`` with the lower
half of the disk ``x**2 + z**2 < r**2`` removed. The water surface is split
into the free part and two control intervals ``r <= |x| <= r + c``
flanking the body. Triangulation is delegated to Shewchuk's Triangle
(``triangle`` package); boundary vertices are placed beforehand so that
every boundary edge is known and tagged exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
import triangle

from .errors import InvalidGeometry, MeshingFailure

__all__ = [
    "BoundaryTag",
    "SliceGeometryConfig",
    "Mesh2D",
    "MeshReport",
    "build_slice_mesh",
    "build_channel_mesh",
    "validate_mesh",
    "write_mesh",
    "read_mesh",
]

MIN_TRIANGLE_AREA = 1e-14
SURFACE_TOL = 1e-12


class BoundaryTag(IntEnum):
    FREE_SURFACE = 1
    CONTROL_SURFACE = 2
    BOTTOM = 3
    BODY = 4
    TRUNCATION = 5

    @property
    def label(self) -> str:
        return _TAG_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "BoundaryTag":
        for tag, name in _TAG_LABELS.items():
            if name == label:
                return tag
        raise ValueError(f"unknown boundary tag {label!r}")


_TAG_LABELS = {
    BoundaryTag.FREE_SURFACE: "FreeSurface",
    BoundaryTag.CONTROL_SURFACE: "ControlSurface",
    BoundaryTag.BOTTOM: "Bottom",
    BoundaryTag.BODY: "Body",
    BoundaryTag.TRUNCATION: "Truncation",
}


@dataclass(frozen=True)
class SliceGeometryConfig:
    """Dimensions of the slice domain, all in metres.

    Parameters
    ----------
    depth : float
        Still-water depth ``h0``.
    half_width : float
        Horizontal half-extent ``L``; truncation lines sit at ``x = +-L``.
    body_radius : float
        Radius ``r`` of the half-submerged circular body.
    control_extent : float
        Horizontal reach ``c`` of each control interval from the body edge.
    mesh_size : float
        Target triangle size ``h``.
    with_body : bool
        If False the body is removed and the surface above it is free.
    control_spacing : float, optional
        Edge length on the control intervals; defaults to ``mesh_size/2``.
    """

    depth: float = 2.5
    half_width: float = 4.0
    body_radius: float = 0.5
    control_extent: float = 0.5
    mesh_size: float = 0.1
    with_body: bool = True
    control_spacing: float | None = None

    def check(self) -> None:
        h0, L, r, c, h = (self.depth, self.half_width, self.body_radius,
                          self.control_extent, self.mesh_size)
        if not all(math.isfinite(v) for v in (h0, L, r, c, h)):
            raise InvalidGeometry("geometry parameters must be finite")
        if not h0 > r > 0:
            raise InvalidGeometry(f"need depth > body_radius > 0, got {h0}, {r}")
        if c <= 0:
            raise InvalidGeometry("control_extent must be positive (empty control region)")
        if not L > r + c:
            raise InvalidGeometry(f"need half_width > body_radius + control_extent, got {L}")
        if not 0 < h < r:
            raise InvalidGeometry(f"need 0 < mesh_size < body_radius, got {h}")
        s = self.control_spacing
        if s is not None and not (math.isfinite(s) and 0 < s <= c):
            raise InvalidGeometry(f"need 0 < control_spacing <= control_extent, got {s}")


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Triangulated slice with tagged boundary edges.

    ``boundary_edges[e]`` holds vertex indices ``(a, b)``, ``boundary_tags[e]``
    its :class:`BoundaryTag` value and ``edge_normals[e]`` the unit normal
    pointing out of the fluid.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    edge_normals: np.ndarray
    depth: float = field(default=float("nan"))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edges_with(self, tag: BoundaryTag) -> np.ndarray:
        """Indices into ``boundary_edges`` carrying ``tag``."""
        return np.flatnonzero(self.boundary_tags == int(tag))

    def edge_lengths(self, idx=None) -> np.ndarray:
        e = self.boundary_edges if idx is None else self.boundary_edges[idx]
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def tag_length(self, tag: BoundaryTag) -> float:
        return float(self.edge_lengths(self.edges_with(tag)).sum())

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def has_body(self) -> bool:
        return bool(np.any(self.boundary_tags == BoundaryTag.BODY))

    def control_intervals(self) -> list[tuple[float, float]]:
        """Connected x-ranges covered by control edges, sorted left to right."""
        return _intervals(self, BoundaryTag.CONTROL_SURFACE)


def _intervals(mesh: Mesh2D, tag: BoundaryTag) -> list[tuple[float, float]]:
    idx = mesh.edges_with(tag)
    if len(idx) == 0:
        return []
    e = mesh.boundary_edges[idx]
    # connected components through shared vertices
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in e:
        parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for a, b in e:
        groups.setdefault(find(a), []).extend((a, b))
    out = []
    for verts in groups.values():
        xs = mesh.vertices[np.unique(verts), 0]
        out.append((float(xs.min()), float(xs.max())))
    return sorted(out)


def _line(p0, p1, spacing):
    n = max(1, math.ceil(math.dist(p0, p1) / spacing - 1e-9))
    t = np.linspace(0.0, 1.0, n + 1)
    return np.outer(1 - t, p0) + np.outer(t, p1)


def _arc(r, spacing):
    # lower half circle from (-r, 0) to (r, 0) through (0, -r)
    n = max(4, math.ceil(math.pi * r / spacing - 1e-9))
    th = np.linspace(math.pi, 2 * math.pi, n + 1)
    pts = np.c_[r * np.cos(th), r * np.sin(th)]
    pts[0] = (-r, 0.0)
    pts[-1] = (r, 0.0)
    return pts


def _triangulate(pieces, max_area) -> Mesh2D:
    """Mesh the closed polygon given as consecutive tagged polylines."""
    pts, tags = [], []
    for poly, tag in pieces:
        pts.append(poly[:-1])
        tags.extend([int(tag)] * (len(poly) - 1))
    pts = np.vstack(pts)
    n = len(pts)
    seg = np.c_[np.arange(n), (np.arange(n) + 1) % n]
    out = triangle.triangulate(
        {"vertices": pts, "segments": seg, "segment_markers": np.array(tags)},
        f"pq30a{max_area:.17g}YQ",
    )
    verts = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    # input boundary vertices are kept verbatim (-Y); snap surface/bottom z
    verts[:n] = pts
    tag_of = {tuple(sorted(s)): t for s, t in zip(seg.tolist(), tags)}
    return _finish(verts, tris, tag_of)


def _finish(verts, tris, tag_of, depth=float("nan")) -> Mesh2D:
    areas = _signed_areas(verts, tris)
    flip = areas < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    if np.any(np.abs(areas) < MIN_TRIANGLE_AREA):
        raise MeshingFailure(f"degenerate triangle (area {np.abs(areas).min():.3e})")
    bnd, third = _boundary_edges(tris)
    tags = np.zeros(len(bnd), dtype=np.int64)
    for i, (a, b) in enumerate(bnd):
        tags[i] = tag_of.get((min(a, b), max(a, b)), 0)
    normals = _outward_normals(verts, bnd, third)
    order = np.lexsort((bnd[:, 1], bnd[:, 0], tags))
    return Mesh2D(verts, tris, bnd[order], tags[order], normals[order], depth)


def _signed_areas(verts, tris):
    p = verts[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _boundary_edges(tris):
    """Edges used by exactly one triangle, with the opposite vertex."""
    local = np.array([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
    e = np.vstack([tris[:, local[k, :2]] for k in range(3)])
    opp = np.concatenate([tris[:, local[k, 2]] for k in range(3)])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    once = counts[inv.ravel()] == 1
    return e[once], opp[once]


def _outward_normals(verts, edges, third):
    d = verts[edges[:, 1]] - verts[edges[:, 0]]
    n = np.c_[d[:, 1], -d[:, 0]]
    n /= np.hypot(n[:, 0], n[:, 1])[:, None]
    to_third = verts[third] - verts[edges[:, 0]]
    s = np.sign(np.einsum("ij,ij->i", n, to_third))
    return -s[:, None] * n


def build_slice_mesh(cfg: SliceGeometryConfig) -> Mesh2D:
    """Triangulate the slice domain described by ``cfg``.

    Control and body edges are at most ``h/2`` long (body edges also at most
    ``r/5``; control edges ``control_spacing`` when given); the remaining
    boundary uses spacing ``h``.
    """
    cfg.check()
    h0, L, r, c, h = (cfg.depth, cfg.half_width, cfg.body_radius,
                      cfg.control_extent, cfg.mesh_size)
    fine = h / 2
    cs = cfg.control_spacing or fine
    F, Cc = BoundaryTag.FREE_SURFACE, BoundaryTag.CONTROL_SURFACE
    pieces = [
        (_line((-L, 0.0), (-r - c, 0.0), h), F),
        (_line((-r - c, 0.0), (-r, 0.0), cs), Cc),
    ]
    if cfg.with_body:
        pieces.append((_arc(r, min(fine, r / 5)), BoundaryTag.BODY))
    else:
        pieces.append((_line((-r, 0.0), (r, 0.0), fine), F))
    pieces += [
        (_line((r, 0.0), (r + c, 0.0), cs), Cc),
        (_line((r + c, 0.0), (L, 0.0), h), F),
        (_line((L, 0.0), (L, -h0), h), BoundaryTag.TRUNCATION),
        (_line((L, -h0), (-L, -h0), h), BoundaryTag.BOTTOM),
        (_line((-L, -h0), (-L, 0.0), h), BoundaryTag.TRUNCATION),
    ]
    mesh = _triangulate(pieces, math.sqrt(3) / 4 * h * h)
    return Mesh2D(mesh.vertices, mesh.triangles, mesh.boundary_edges,
                  mesh.boundary_tags, mesh.edge_normals, h0)


def build_channel_mesh(half_width: float, depth: float, mesh_size: float,
                       surface: BoundaryTag = BoundaryTag.CONTROL_SURFACE,
                       surface_spacing: float | None = None) -> Mesh2D:
    """Rectangular channel whose whole surface carries one tag (no body)."""
    if not (half_width > 0 and depth > 0 and mesh_size > 0):
        raise InvalidGeometry("channel dimensions must be positive")
    L, h0, h = half_width, depth, mesh_size
    s = surface_spacing or h / 2
    pieces = [
        (_line((-L, 0.0), (L, 0.0), s), surface),
        (_line((L, 0.0), (L, -h0), h), BoundaryTag.TRUNCATION),
        (_line((L, -h0), (-L, -h0), h), BoundaryTag.BOTTOM),
        (_line((-L, -h0), (-L, 0.0), h), BoundaryTag.TRUNCATION),
    ]
    mesh = _triangulate(pieces, math.sqrt(3) / 4 * h * h)
    return Mesh2D(mesh.vertices, mesh.triangles, mesh.boundary_edges,
                  mesh.boundary_tags, mesh.edge_normals, h0)


@dataclass
class MeshReport:
    coverage_ok: bool
    surface_ok: bool
    control_intervals_ok: bool
    orientation_ok: bool
    area_ok: bool
    min_quality: float
    n_control_intervals: int
    messages: list[str]

    @property
    def passed(self) -> bool:
        return (self.coverage_ok and self.surface_ok and self.control_intervals_ok
                and self.orientation_ok and self.area_ok)

    def __str__(self):
        lines = [
            f"coverage:          {'ok' if self.coverage_ok else 'FAIL'}",
            f"surface placement: {'ok' if self.surface_ok else 'FAIL'}",
            f"control intervals: {self.n_control_intervals} "
            f"({'ok' if self.control_intervals_ok else 'FAIL'})",
            f"normal orientation:{' ok' if self.orientation_ok else ' FAIL'}",
            f"triangle areas:    {'ok' if self.area_ok else 'FAIL'}",
            f"min quality:       {self.min_quality:.4f}",
        ]
        return "\n".join(lines + self.messages)


def _quality(verts, tris):
    """Ratio inradius / circumradius (0.5 for an equilateral triangle)."""
    p = verts[tris]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    area = np.abs(_signed_areas(verts, tris))
    s = 0.5 * (a + b + c)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (area / s) / (a * b * c / (4 * area))
    return np.nan_to_num(q)


def validate_mesh(mesh: Mesh2D, control_intervals: int | None = 2) -> MeshReport:
    """Check the structural invariants of ``mesh``; never raises.

    ``control_intervals`` is the expected number of connected control
    intervals (``None`` skips the check).
    """
    msgs = []
    verts, tris = mesh.vertices, mesh.triangles
    bnd, third = _boundary_edges(tris)
    key_true = {tuple(sorted(e)): t for e, t in zip(bnd.tolist(), third.tolist())}
    tagged: dict[tuple, list[int]] = {}
    for e, t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist()):
        tagged.setdefault(tuple(sorted(e)), []).append(t)
    valid_tags = {int(t) for t in BoundaryTag}
    coverage = True
    missing = [k for k in key_true if k not in tagged]
    if missing:
        coverage = False
        msgs.append(f"{len(missing)} boundary edge(s) without tag")
    extra = [k for k in tagged if k not in key_true]
    if extra:
        coverage = False
        msgs.append(f"{len(extra)} tagged edge(s) not on the boundary")
    multi = [k for k, v in tagged.items() if len(v) != 1 or v[0] not in valid_tags]
    if multi:
        coverage = False
        msgs.append(f"{len(multi)} edge(s) with missing, duplicate or invalid tag")

    surface = True
    z = verts[:, 1]
    for tag in (BoundaryTag.FREE_SURFACE, BoundaryTag.CONTROL_SURFACE):
        e = mesh.boundary_edges[mesh.edges_with(tag)]
        if e.size and np.abs(z[e]).max() > SURFACE_TOL:
            surface = False
            msgs.append(f"{tag.label} edges off z = 0")
    e = mesh.boundary_edges[mesh.edges_with(BoundaryTag.BOTTOM)]
    if e.size and math.isfinite(mesh.depth) and np.abs(z[e] + mesh.depth).max() > SURFACE_TOL:
        surface = False
        msgs.append("Bottom edges off z = -h0")

    n_int = len(mesh.control_intervals())
    intervals_ok = control_intervals is None or n_int == control_intervals
    if not intervals_ok:
        msgs.append(f"expected {control_intervals} control intervals, found {n_int}")

    orient = True
    for (a, b), n in zip(mesh.boundary_edges, mesh.edge_normals):
        t = key_true.get((min(a, b), max(a, b)))
        if t is None:
            continue
        if np.dot(n, verts[t] - verts[a]) >= 0 or abs(np.linalg.norm(n) - 1) > 1e-10:
            orient = False
    if not orient:
        msgs.append("normal(s) not pointing out of the fluid")

    areas = _signed_areas(verts, tris)
    area_ok = bool(np.all(areas > MIN_TRIANGLE_AREA))
    if not area_ok:
        msgs.append("degenerate or inverted triangle(s)")
    q = _quality(verts, tris)
    return MeshReport(coverage, surface, intervals_ok, orient, area_ok,
                      float(q.min()) if len(q) else 0.0, n_int, msgs)


def write_mesh(mesh: Mesh2D, path) -> None:
    """Plain-text export: ``v x z`` / ``t i j k`` / ``b i j TAG`` (1-based)."""
    lines = []
    if math.isfinite(mesh.depth):
        lines.append(f"# depth {mesh.depth:.17g}")
    lines += [f"v {x:.17g} {z:.17g}" for x, z in mesh.vertices]
    lines += [f"t {i + 1} {j + 1} {k + 1}" for i, j, k in mesh.triangles]
    lines += [f"b {a + 1} {b + 1} {BoundaryTag(t).label}"
              for (a, b), t in zip(mesh.boundary_edges, mesh.boundary_tags)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_mesh(path) -> Mesh2D:
    verts, tris, tag_of = [], [], {}
    depth = float("nan")
    for lineno, raw in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "#":
            if len(parts) == 3 and parts[1] == "depth":
                depth = float(parts[2])
            continue
        try:
            if parts[0] == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "t":
                tris.append(tuple(int(p) - 1 for p in parts[1:4]))
            elif parts[0] == "b":
                a, b = int(parts[1]) - 1, int(parts[2]) - 1
                tag_of[(min(a, b), max(a, b))] = int(BoundaryTag.from_label(parts[3]))
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise MeshingFailure(f"{path}:{lineno}: {exc}") from None
    return _finish(np.array(verts, dtype=float), np.array(tris, dtype=np.int64),
                   tag_of, depth)
