"""Bounded-geometry certification.

Decides, with witnesses, whether a surface's triangles are uniformly
comparable to the standard (equilateral) triangle: at unit scale for the
Lipschitz check, at a per-vertex scale of its own for the quasiconformal
check. Also checks cone-angle windows against a parameter K >= 1.

Simplex counts follow the convention that a point is contained in all the
closed simplices touching it, of every dimension: a vertex of degree d on a
closed surface sits in d faces, d edges and itself, 2d + 1 simplices. The
face-only count is reported alongside so either reading can be audited.
Interior points of edges and faces are dominated by the counts and scale
intervals of the adjacent vertices, so vertex checks decide the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateTriangleError
from .mesh import TWO_PI, PolyhedralSurface, _check_triangle

SQRT3_2 = math.sqrt(3.0) / 2.0

# Padding for comparisons at interval endpoints (relative to the magnitudes
# involved); keeps boundary cases deterministic instead of rounding-lucky.
_PAD = 1e-12


def _leq(a: float, b: float) -> bool:
    return a <= b + _PAD * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class TriangleShape:
    """Side lengths of a nondegenerate Euclidean triangle."""

    lengths: tuple[float, float, float]

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) != 3 or any(not (x > 0.0 and math.isfinite(x)) for x in lengths):
            raise DegenerateTriangleError(lengths)
        if not _check_triangle(*lengths):
            raise DegenerateTriangleError(lengths)


def plane_embedding(shape: TriangleShape):
    """Canonical flat realization: (0, 0), (a, 0) and the apex above the axis.

    With lengths (a, b, c): a = |P1 P2|, b = |P2 P3|, c = |P3 P1|.
    """
    a, b, c = shape.lengths
    x = (a * a + c * c - b * b) / (2.0 * a)
    y_sq = c * c - x * x
    if y_sq <= 0.0:
        raise DegenerateTriangleError(shape.lengths)
    return (0.0, 0.0), (a, 0.0), (x, math.sqrt(y_sq))


def singular_values_2x2(m00: float, m01: float, m10: float, m11: float):
    """Closed-form singular values (s1 >= s2 >= 0) of [[m00, m01], [m10, m11]]."""
    h1 = math.hypot(m00 - m11, m10 + m01)
    h2 = math.hypot(m00 + m11, m10 - m01)
    return 0.5 * (h2 + h1), 0.5 * abs(h2 - h1)


def affine_singular_values(shape: TriangleShape, target_side: float):
    """Singular values of the linear map taking the embedded shape onto the
    standard triangle of the given side, matching vertices, origin fixed.

    The equilateral target's isometry group makes all six vertex
    correspondences equivalent, so the lengths are canonicalized by sorting
    and permutation invariance is exact. Scaling shape and target together
    leaves the map itself unchanged, which the lengths/target normalization
    mirrors.
    """
    if not (target_side > 0.0 and math.isfinite(target_side)):
        raise ValueError(f"target side must be positive, got {target_side!r}")
    a, b, c = sorted(shape.lengths)
    unit = TriangleShape((a / target_side, b / target_side, c / target_side))
    (_, _), (ua, _), (x, y) = plane_embedding(unit)
    # upper-triangular map sending (ua, 0), (x, y) to (1, 0), (1/2, sqrt(3)/2)
    s1, s2 = singular_values_2x2(1.0 / ua, (0.5 - x / ua) / y, 0.0, SQRT3_2 / y)
    return s1, s2


def simplex_bilip_constant(shape: TriangleShape, target_side: float) -> float:
    """Optimal linear bi-Lipschitz constant to the standard triangle:
    max(s1, 1/s2) for the vertex-matching affine map."""
    s1, s2 = affine_singular_values(shape, target_side)
    return max(s1, 1.0 / s2)


def feasible_scale_interval(shape: TriangleShape, M: float):
    """Closed interval of target sides r with simplex_bilip_constant <= M.

    The constant at side r is max(r s1, 1/(r s2)) in terms of the unit-side
    singular values, so the interval is [1/(M s2), M/s1]; it is empty when
    s1/s2 > M^2.
    """
    s1, s2 = affine_singular_values(shape, 1.0)
    return 1.0 / (M * s2), M / s1


def simplex_count(surface: PolyhedralSurface, vertex: int) -> int:
    """Closed simplices containing the vertex: faces + edges + the vertex."""
    return len(surface.faces_at(vertex)) + len(surface.edges_at(vertex)) + 1


@dataclass(frozen=True)
class CertificationReport:
    """Per-vertex / per-face verdicts with failure witnesses.

    ``verdict`` is True exactly when every entry's own check passed.
    """

    mode: str
    parameter: float
    verdict: bool
    per_vertex: dict
    per_face: dict
    witnesses: tuple[str, ...]
    minimal_M: int | None = None

    def to_dict(self) -> dict:
        return {
            "report": "certification",
            "mode": self.mode,
            "parameter": self.parameter,
            "verdict": "pass" if self.verdict else "fail",
            "minimal_M": self.minimal_M,
            "per_vertex": {str(v): self.per_vertex[v] for v in sorted(self.per_vertex)},
            "per_face": {str(f): self.per_face[f] for f in sorted(self.per_face)},
            "witnesses": list(self.witnesses),
        }

    def with_minimal_M(self, value: int) -> "CertificationReport":
        return CertificationReport(
            self.mode, self.parameter, self.verdict,
            self.per_vertex, self.per_face, self.witnesses, value,
        )


def _face_shapes(surface: PolyhedralSurface):
    return {fi: TriangleShape(surface.face_lengths(fi)) for fi in range(len(surface.faces))}


def certify_lipschitz(surface: PolyhedralSurface, M: int) -> CertificationReport:
    """Unit-scale certification: every vertex in at most M simplices, every
    face within bi-Lipschitz constant M of the unit standard triangle."""
    M = _check_m(M)
    per_vertex, per_face, witnesses = {}, {}, []
    for v in surface.vertices:
        count = simplex_count(surface, v)
        ok = count <= M
        per_vertex[v] = {
            "simplex_count": count,
            "face_count": len(surface.faces_at(v)),
            "ok": ok,
        }
        if not ok:
            witnesses.append(f"vertex {v}: {count} simplices > M = {M}")
    for fi, shape in _face_shapes(surface).items():
        constant = simplex_bilip_constant(shape, 1.0)
        ok = _leq(constant, M)
        per_face[fi] = {"bilip_constant": constant, "scale": 1.0, "ok": ok}
        if not ok:
            witnesses.append(f"face {fi}: bi-Lipschitz constant {constant:.6g} > M = {M}")
    verdict = all(e["ok"] for e in per_vertex.values()) and all(
        e["ok"] for e in per_face.values()
    )
    return CertificationReport("lipschitz", float(M), verdict, per_vertex, per_face,
                               tuple(witnesses))


def certify_quasiconformal(surface: PolyhedralSurface, M: int) -> CertificationReport:
    """Scale-free certification: at every vertex some single side length r
    brings all incident faces within bi-Lipschitz constant M of the standard
    triangle, and counts stay at most M."""
    M = _check_m(M)
    shapes = _face_shapes(surface)
    intervals = {fi: feasible_scale_interval(shape, M) for fi, shape in shapes.items()}
    per_vertex, per_face, witnesses = {}, {}, []
    for fi, (lo, hi) in intervals.items():
        per_face[fi] = {
            "bilip_constant_optimal": min_bilip_constant(shapes[fi]),
            "scale_interval": [lo, hi],
            "ok": _leq(lo, hi),
        }
    for v in surface.vertices:
        count = simplex_count(surface, v)
        count_ok = count <= M
        fis = surface.faces_at(v)
        lo = max(intervals[fi][0] for fi in fis)
        hi = min(intervals[fi][1] for fi in fis)
        interval_ok = _leq(lo, hi)
        per_vertex[v] = {
            "simplex_count": count,
            "face_count": len(fis),
            "count_ok": count_ok,
            "scale_interval": [lo, hi] if interval_ok else None,
            "witness_scale": math.sqrt(lo * hi) if interval_ok else None,
            "interval_ok": interval_ok,
            "ok": count_ok and interval_ok,
        }
        if not count_ok:
            witnesses.append(f"vertex {v}: {count} simplices > M = {M}")
        if not interval_ok:
            witnesses.append(
                f"vertex {v}: no common scale (intersection [{lo:.6g}, {hi:.6g}] empty)"
            )
    verdict = all(e["ok"] for e in per_vertex.values())
    return CertificationReport("quasiconformal", float(M), verdict, per_vertex, per_face,
                               tuple(witnesses))


def min_bilip_constant(shape: TriangleShape) -> float:
    """Best constant over all scales: sqrt(s1/s2), reached at r = 1/sqrt(s1 s2)."""
    s1, s2 = affine_singular_values(shape, 1.0)
    return math.sqrt(s1 / s2)


def _check_m(M) -> int:
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    return M


def minimal_M(surface: PolyhedralSurface, mode: str = "lipschitz") -> int:
    """Smallest M for which the requested certification passes."""
    if mode not in ("lipschitz", "quasiconformal"):
        raise ValueError(f"mode must be 'lipschitz' or 'quasiconformal', got {mode!r}")
    max_count = max(simplex_count(surface, v) for v in surface.vertices)
    shapes = _face_shapes(surface)
    sigma = {fi: affine_singular_values(s, 1.0) for fi, s in shapes.items()}

    def passes(M: int) -> bool:
        if max_count > M:
            return False
        if mode == "lipschitz":
            return all(_leq(max(s1, 1.0 / s2), M) for s1, s2 in sigma.values())
        for v in surface.vertices:
            fis = surface.faces_at(v)
            lo = max(1.0 / (M * sigma[fi][1]) for fi in fis)
            hi = min(M / sigma[fi][0] for fi in fis)
            if not _leq(lo, hi):
                return False
        return True

    hi = 1
    while not passes(hi):
        hi *= 2
        if hi > 2**40:  # unreachable for validated surfaces
            raise RuntimeError("no feasible M found")
    lo = hi // 2
    while lo + 1 < hi:  # invariant: passes(hi), not passes(lo)
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi if hi > 1 or passes(1) else 1


# ---------------------------------------------------------------------------
# Cone-angle windows


def window_bounds(K: float, window: str) -> tuple[float, float]:
    """Closed cone-angle window for parameter K >= 1.

    "hypothesis": [2 pi / K, 2 pi K], the smoothability assumption;
    "obstruction": [2 pi / K^2, 2 pi K^2], the necessary condition any
    K-bi-Lipschitz smoothing must satisfy.
    """
    if not (K >= 1.0 and math.isfinite(K)):
        raise ValueError(f"K must be >= 1, got {K!r}")
    if window == "hypothesis":
        return 2.0 * math.pi / K, 2.0 * math.pi * K
    if window == "obstruction":
        kk = K * K
        return 2.0 * math.pi / kk, 2.0 * math.pi * kk
    raise ValueError(f"window must be 'hypothesis' or 'obstruction', got {window!r}")


def angle_in_window(angle: float, K: float, window: str) -> bool:
    lo, hi = window_bounds(K, window)
    return lo <= angle <= hi


def angle_window_check(surface: PolyhedralSurface, K: float, window: str) -> CertificationReport:
    """Check every interior vertex's cone angle against the window.

    Boundary vertices are reported but not judged (their angle sum is not an
    interior cone angle).
    """
    lo, hi = window_bounds(K, window)
    per_vertex, witnesses = {}, []
    for v in surface.vertices:
        angle = surface.cone_angle(v)
        boundary = v in surface.boundary_vertices
        ok = None if boundary else (lo <= angle <= hi)
        per_vertex[v] = {"cone_angle": angle, "boundary": boundary, "ok": ok}
        if ok is False:
            witnesses.append(
                f"vertex {v}: cone angle {angle:.9g} outside [{lo:.9g}, {hi:.9g}]"
            )
    verdict = all(e["ok"] is not False for e in per_vertex.values())
    return CertificationReport(window, float(K), verdict, per_vertex, {}, tuple(witnesses))


def smallest_hypothesis_K(surface: PolyhedralSurface) -> float:
    """Smallest K >= 1 whose hypothesis window contains all interior angles."""
    K = 1.0
    for v in surface.vertices:
        if v in surface.boundary_vertices:
            continue
        beta = surface.cone_angle(v) / TWO_PI
        K = max(K, beta, 1.0 / beta)
    return K
