"""Intrinsic polyhedral surfaces.

A surface is a triangulated 2-manifold given purely by combinatorics plus
one positive length per edge; there is no embedding. All local geometry
(corner angles, cone angles, safe radii) is derived from the edge lengths
via flat Euclidean triangles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

from .errors import (
    BadVertexLinkError,
    DisconnectedSurfaceError,
    MalformedDocumentError,
    NonManifoldEdgeError,
    NonPositiveLengthError,
    NonTriangularFaceError,
    TriangleInequalityViolation,
    UnknownVertexError,
    VertexNotInFaceError,
)

TWO_PI = 2.0 * math.pi

# Relative slack on the strict triangle inequality: a face whose lengths
# close up within this fraction of the perimeter is a hard error.
_TRIANGLE_EPS = 1e-12


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _check_triangle(a: float, b: float, c: float) -> bool:
    """Strict triangle inequality with relative slack _TRIANGLE_EPS."""
    margin = _TRIANGLE_EPS * (a + b + c)
    return (a + b - c > margin) and (b + c - a > margin) and (c + a - b > margin)


def corner_angle_from_lengths(b: float, c: float, a: float) -> float:
    """Angle between the sides of lengths b and c, opposite side a.

    arccos is clamped to [-1, 1] to absorb rounding near needle triangles.
    """
    cos_val = (b * b + c * c - a * a) / (2.0 * b * c)
    return math.acos(min(1.0, max(-1.0, cos_val)))


def triangle_area(a: float, b: float, c: float) -> float:
    """Heron's formula (numerically stable Kahan ordering)."""
    a, b, c = sorted((a, b, c), reverse=True)
    s = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(s, 0.0))


@dataclass(frozen=True)
class VertexCone:
    """Isometric cone model of the surface around one vertex.

    The open disk of radius ``rho`` about ``vertex`` is isometric to a cone
    of angle ``alpha`` and contains no other vertex.
    """

    vertex: int
    alpha: float
    rho: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.rho > 0.0):
            raise ValueError("cone angle and safe radius must be positive")


class PolyhedralSurface:
    """Validated intrinsic triangulated surface.

    Immutable after construction; every method is a pure function of the
    stored data, so instances are safe to share across threads.
    """

    def __init__(self, vertices, faces, edge_lengths):
        self._vertices = tuple(sorted(vertices))
        self._vertex_set = frozenset(self._vertices)
        self._faces = tuple(tuple(f) for f in faces)
        self._edge_lengths = {
            _edge_key(u, v): float(length) for (u, v), length in edge_lengths.items()
        }
        self._validate()

    # -- construction-time validation ---------------------------------------

    def _validate(self):
        if not self._faces:
            raise MalformedDocumentError("surface has no faces")
        for e, length in self._edge_lengths.items():
            if not (math.isfinite(length) and length > 0.0):
                raise NonPositiveLengthError(e, length)

        edge_faces: dict[tuple[int, int], list[int]] = {}
        for fi, face in enumerate(self._faces):
            if len(face) != 3:
                raise MalformedDocumentError(f"face {fi} is not a vertex triple")
            if len(set(face)) != 3:
                raise MalformedDocumentError(f"face {fi} repeats a vertex: {face}")
            for v in face:
                if v not in self._vertex_set:
                    raise MalformedDocumentError(
                        f"face {fi} references unknown vertex {v}"
                    )
            for u, v in ((face[0], face[1]), (face[1], face[2]), (face[2], face[0])):
                key = _edge_key(u, v)
                if key not in self._edge_lengths:
                    raise MalformedDocumentError(
                        f"face {fi} uses edge {key} with no recorded length"
                    )
                edge_faces.setdefault(key, []).append(fi)

        unused = set(self._edge_lengths) - set(edge_faces)
        if unused:
            raise MalformedDocumentError(
                f"edge {min(unused)} has a recorded length but is used by no face"
            )

        for fi in range(len(self._faces)):
            a, b, c = self.face_lengths(fi)
            if not _check_triangle(a, b, c):
                raise TriangleInequalityViolation(fi, (a, b, c))

        for edge, fis in edge_faces.items():
            if len(fis) > 2:
                raise NonManifoldEdgeError(edge, len(fis))
        self._edge_faces = {e: tuple(fis) for e, fis in edge_faces.items()}

        vertex_faces: dict[int, list[int]] = {v: [] for v in self._vertices}
        for fi, face in enumerate(self._faces):
            for v in face:
                vertex_faces[v].append(fi)
        self._vertex_faces = {v: tuple(fis) for v, fis in vertex_faces.items()}

        self._boundary_edges = frozenset(
            e for e, fis in self._edge_faces.items() if len(fis) == 1
        )
        self._check_links()
        self._check_connected()

    def _check_links(self):
        """Each vertex's incident faces must form one path (boundary) or one
        cycle (interior), i.e. the link is a simple arc or circle."""
        boundary_vertices = set()
        for v in self._vertices:
            fis = self._vertex_faces[v]
            if not fis:
                raise BadVertexLinkError(v, "isolated vertex (no incident faces)")
            # union-find over incident faces, joined via shared edges at v
            parent = {fi: fi for fi in fis}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            boundary_here = 0
            for e, efis in self._edges_at_vertex(v).items():
                if len(efis) == 2:
                    ra, rb = find(efis[0]), find(efis[1])
                    if ra != rb:
                        parent[ra] = rb
                else:
                    boundary_here += 1
            roots = {find(fi) for fi in fis}
            if len(roots) != 1:
                raise BadVertexLinkError(
                    v, f"star splits into {len(roots)} components (pinched vertex)"
                )
            if boundary_here not in (0, 2):
                raise BadVertexLinkError(
                    v, f"{boundary_here} boundary edges meet here (expected 0 or 2)"
                )
            if boundary_here:
                boundary_vertices.add(v)
        self._boundary_vertices = frozenset(boundary_vertices)

    def _edges_at_vertex(self, v):
        out = {}
        for fi in self._vertex_faces[v]:
            face = self._faces[fi]
            others = [w for w in face if w != v]
            for w in others:
                out.setdefault(_edge_key(v, w), []).append(fi)
        return out

    def _check_connected(self):
        seen = {0}
        stack = [0]
        while stack:
            fi = stack.pop()
            face = self._faces[fi]
            for u, v in ((face[0], face[1]), (face[1], face[2]), (face[2], face[0])):
                for nb in self._edge_faces[_edge_key(u, v)]:
                    if nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        if len(seen) != len(self._faces):
            raise DisconnectedSurfaceError(
                f"{len(self._faces) - len(seen)} of {len(self._faces)} faces are "
                "unreachable from face 0"
            )

    # -- basic accessors -----------------------------------------------------

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._vertices

    @property
    def faces(self) -> tuple[tuple[int, int, int], ...]:
        return self._faces

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self._edge_faces))

    @property
    def boundary_vertices(self) -> frozenset[int]:
        return self._boundary_vertices

    @property
    def boundary_edges(self) -> frozenset[tuple[int, int]]:
        return self._boundary_edges

    @property
    def is_closed(self) -> bool:
        return not self._boundary_edges

    @property
    def euler_characteristic(self) -> int:
        return len(self._vertices) - len(self._edge_faces) + len(self._faces)

    def edge_length(self, u: int, v: int) -> float:
        return self._edge_lengths[_edge_key(u, v)]

    def edge_lengths(self) -> dict[tuple[int, int], float]:
        return dict(self._edge_lengths)

    def faces_at(self, vertex: int) -> tuple[int, ...]:
        if vertex not in self._vertex_set:
            raise UnknownVertexError(vertex)
        return self._vertex_faces[vertex]

    def edges_at(self, vertex: int) -> tuple[tuple[int, int], ...]:
        if vertex not in self._vertex_set:
            raise UnknownVertexError(vertex)
        return tuple(sorted(self._edges_at_vertex(vertex)))

    def face_lengths(self, face_index: int) -> tuple[float, float, float]:
        """Side lengths (|v0 v1|, |v1 v2|, |v2 v0|) of one face."""
        i, j, k = self._faces[face_index]
        return (self.edge_length(i, j), self.edge_length(j, k), self.edge_length(k, i))

    # -- local geometry --------------------------------------------------------

    def corner_angle(self, face_index: int, vertex: int) -> float:
        """Interior angle of a face at one of its vertices, in (0, pi)."""
        if vertex not in self._vertex_set:
            raise UnknownVertexError(vertex)
        face = self._faces[face_index]
        if vertex not in face:
            raise VertexNotInFaceError(vertex, face_index)
        i = face.index(vertex)
        opposite = self.edge_length(face[(i + 1) % 3], face[(i + 2) % 3])
        b = self.edge_length(vertex, face[(i + 1) % 3])
        c = self.edge_length(vertex, face[(i + 2) % 3])
        return corner_angle_from_lengths(b, c, opposite)

    def cone_angle(self, vertex: int) -> float:
        """Total angle around a vertex (sum of incident corner angles).

        For a boundary vertex the sum is still returned; callers that need
        an interior cone must consult ``boundary_vertices``.
        """
        if vertex not in self._vertex_set:
            raise UnknownVertexError(vertex)
        return self._angle_sums[vertex]

    @cached_property
    def _angle_sums(self) -> dict[int, float]:
        sums = {v: 0.0 for v in self._vertices}
        for fi, face in enumerate(self._faces):
            for v in face:
                sums[v] += self.corner_angle(fi, v)
        return sums

    def angle_defect(self, vertex: int) -> float:
        return TWO_PI - self.cone_angle(vertex)

    def defect_sum(self) -> float:
        """Total angle defect; equals 2*pi*chi on closed surfaces."""
        return sum(self.angle_defect(v) for v in self._vertices)

    def safe_radius(self, vertex: int) -> float:
        """Radius rho(v): half the least of incident edge lengths and flat
        triangle heights from v.

        Any path from v out of its star crosses the link, which lies at
        distance >= min(height, edge), so the open rho-disk is a cone with
        no other vertex.
        """
        if vertex not in self._vertex_set:
            raise UnknownVertexError(vertex)
        best = math.inf
        for fi in self._vertex_faces[vertex]:
            face = self._faces[fi]
            i = face.index(vertex)
            b = self.edge_length(vertex, face[(i + 1) % 3])
            c = self.edge_length(vertex, face[(i + 2) % 3])
            a = self.edge_length(face[(i + 1) % 3], face[(i + 2) % 3])
            height = 2.0 * triangle_area(a, b, c) / a
            best = min(best, b, c, height)
        return 0.5 * best

    def min_vertex_separation(self) -> float:
        """Certified lower bound for the infimal vertex-to-vertex distance.

        Equals 2 * min rho(v). The exact geodesic infimum is out of scope;
        the curvature bound is monotone decreasing in this quantity, so a
        lower bound keeps every verified inequality conservative.
        """
        return 2.0 * min(self.safe_radius(v) for v in self._vertices)

    def vertex_cone(self, vertex: int) -> VertexCone:
        return VertexCone(vertex, self.cone_angle(vertex), self.safe_radius(vertex))

    # -- transforms / export ---------------------------------------------------

    def scaled(self, factor: float) -> "PolyhedralSurface":
        """Same combinatorics with all lengths multiplied by factor > 0."""
        if not factor > 0.0:
            raise ValueError("scale factor must be positive")
        return PolyhedralSurface(
            self._vertices,
            self._faces,
            {e: length * factor for e, length in self._edge_lengths.items()},
        )

    def to_document(self) -> dict:
        """Intrinsic-mesh JSON document (inverse of parse_surface)."""
        return {
            "vertices": list(self._vertices),
            "faces": [list(f) for f in self._faces],
            "edge_lengths": [
                {"u": u, "v": v, "len": self._edge_lengths[(u, v)]}
                for (u, v) in sorted(self._edge_lengths)
            ],
        }

    def stats(self) -> dict:
        return {
            "vertices": len(self._vertices),
            "edges": len(self._edge_faces),
            "faces": len(self._faces),
            "euler_characteristic": self.euler_characteristic,
            "closed": self.is_closed,
            "boundary_vertices": sorted(self._boundary_vertices),
        }


# ---------------------------------------------------------------------------
# Parsers


def _require_id(value, what):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MalformedDocumentError(f"{what} must be a non-negative integer, got {value!r}")
    return value


def parse_surface(document) -> PolyhedralSurface:
    """Parse an intrinsic-mesh document (JSON text or an equivalent dict).

    Schema::

        {"vertices": [id, ...],
         "faces": [[i, j, k], ...],
         "edge_lengths": [{"u": i, "v": j, "len": x}, ...]}
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocumentError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedDocumentError("document root must be a JSON object")
    missing = {"vertices", "faces", "edge_lengths"} - set(document)
    if missing:
        raise MalformedDocumentError(f"missing keys: {sorted(missing)}")

    vertices = [_require_id(v, "vertex id") for v in document["vertices"]]
    if len(set(vertices)) != len(vertices):
        raise MalformedDocumentError("duplicate vertex ids")

    faces = []
    for fi, face in enumerate(document["faces"]):
        if not isinstance(face, (list, tuple)) or len(face) != 3:
            raise MalformedDocumentError(f"face {fi} must be a triple of vertex ids")
        faces.append(tuple(_require_id(v, f"face {fi} vertex") for v in face))

    lengths = {}
    for entry in document["edge_lengths"]:
        if not isinstance(entry, dict) or {"u", "v", "len"} - set(entry):
            raise MalformedDocumentError(
                f"edge length entries must be objects with keys u, v, len; got {entry!r}"
            )
        u = _require_id(entry["u"], "edge endpoint")
        v = _require_id(entry["v"], "edge endpoint")
        if u == v:
            raise MalformedDocumentError(f"edge ({u}, {v}) is a loop")
        key = _edge_key(u, v)
        if key in lengths:
            raise MalformedDocumentError(f"duplicate edge length for {key}")
        try:
            lengths[key] = float(entry["len"])
        except (TypeError, ValueError) as exc:
            raise MalformedDocumentError(f"edge {key} length {entry['len']!r}") from exc

    return PolyhedralSurface(vertices, faces, lengths)


def ingest_off(text: str) -> PolyhedralSurface:
    """Build a surface from an ASCII OFF file with triangular faces.

    Edge lengths are the Euclidean distances between the 3-D coordinates;
    the embedding itself is discarded after that.
    """
    tokens = []
    for line in text.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.extend(body.split())
    if not tokens:
        raise MalformedDocumentError("empty OFF document")
    if tokens[0].upper() == "OFF":
        tokens = tokens[1:]
    if len(tokens) < 3:
        raise MalformedDocumentError("OFF header truncated")
    try:
        n_vertices, n_faces = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise MalformedDocumentError(f"bad OFF counts: {tokens[:3]}") from exc
    pos = 3  # vertex/face/edge counts consumed; OFF edge count is ignored

    coords = []
    if len(tokens) < pos + 3 * n_vertices:
        raise MalformedDocumentError("OFF vertex section truncated")
    for i in range(n_vertices):
        try:
            coords.append(tuple(float(t) for t in tokens[pos : pos + 3]))
        except ValueError as exc:
            raise MalformedDocumentError(f"bad coordinates for vertex {i}") from exc
        pos += 3

    faces = []
    for fi in range(n_faces):
        if pos >= len(tokens):
            raise MalformedDocumentError("OFF face section truncated")
        try:
            k = int(tokens[pos])
        except ValueError as exc:
            raise MalformedDocumentError(f"bad vertex count in face {fi}") from exc
        if k != 3:
            raise NonTriangularFaceError(fi, k)
        if pos + 1 + k > len(tokens):
            raise MalformedDocumentError(f"face {fi} truncated")
        try:
            face = tuple(int(t) for t in tokens[pos + 1 : pos + 1 + k])
        except ValueError as exc:
            raise MalformedDocumentError(f"bad vertex index in face {fi}") from exc
        for v in face:
            if not 0 <= v < n_vertices:
                raise MalformedDocumentError(f"face {fi} references vertex {v}")
        faces.append(face)
        pos += 1 + k

    lengths = {}
    for face in faces:
        for u, v in ((face[0], face[1]), (face[1], face[2]), (face[2], face[0])):
            key = _edge_key(u, v)
            if key not in lengths:
                lengths[key] = math.dist(coords[u], coords[v])
    return PolyhedralSurface(range(n_vertices), faces, lengths)


def load_surface(path, fmt: str | None = None) -> PolyhedralSurface:
    """Read a surface from a file, sniffing the format by extension.

    fmt overrides sniffing: "json" for intrinsic documents, "off" for OFF.
    """
    from pathlib import Path

    p = Path(path)
    text = p.read_text()
    if fmt is None:
        fmt = "off" if p.suffix.lower() == ".off" else "json"
    if fmt == "off":
        return ingest_off(text)
    if fmt == "json":
        return parse_surface(text)
    raise ValueError(f"unknown input format {fmt!r}")
