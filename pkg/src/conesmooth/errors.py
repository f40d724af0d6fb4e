"""Exception hierarchy.

Every error carries enough structure to name the offending element
(face index, edge pair, vertex id, witness point) so that callers and
the CLI can emit machine-parsable diagnostics.
"""


class ConeSmoothError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# Surface ingestion / validation

class InvalidSurfaceError(ConeSmoothError):
    """The input does not describe a valid polyhedral metric surface."""


class MalformedDocumentError(InvalidSurfaceError):
    """Syntax or schema violation in a mesh document."""


class NonPositiveLengthError(InvalidSurfaceError):
    """An edge length is not a finite positive number."""

    def __init__(self, edge, value):
        self.edge = tuple(edge)
        self.value = value
        super().__init__(f"edge {self.edge} has non-positive length {value!r}")


class TriangleInequalityViolation(InvalidSurfaceError):
    """A face's three lengths do not satisfy the strict triangle inequality."""

    def __init__(self, face_index, lengths):
        self.face_index = face_index
        self.lengths = tuple(lengths)
        super().__init__(
            f"face {face_index} with lengths {self.lengths} violates the "
            "strict triangle inequality"
        )


class NonManifoldEdgeError(InvalidSurfaceError):
    """An edge is shared by three or more faces."""

    def __init__(self, edge, face_count):
        self.edge = tuple(edge)
        self.face_count = face_count
        super().__init__(f"edge {self.edge} belongs to {face_count} faces (max 2)")


class BadVertexLinkError(InvalidSurfaceError):
    """The faces around a vertex do not form a single cycle or path."""

    def __init__(self, vertex, reason):
        self.vertex = vertex
        super().__init__(f"vertex {vertex}: {reason}")


class DisconnectedSurfaceError(InvalidSurfaceError):
    """The face-adjacency graph has more than one component."""


class NonTriangularFaceError(InvalidSurfaceError):
    """An OFF face has a vertex count other than three."""

    def __init__(self, face_index, n_vertices):
        self.face_index = face_index
        self.n_vertices = n_vertices
        super().__init__(f"face {face_index} has {n_vertices} vertices, expected 3")


# ---------------------------------------------------------------------------
# Mesh queries

class UnknownVertexError(ConeSmoothError):
    def __init__(self, vertex):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} is not in the surface")


class VertexNotInFaceError(ConeSmoothError):
    def __init__(self, vertex, face_index):
        self.vertex = vertex
        self.face_index = face_index
        super().__init__(f"vertex {vertex} does not belong to face {face_index}")


# ---------------------------------------------------------------------------
# Kernel and smoothed-cone evaluation

class NonPositiveArgumentError(ConeSmoothError):
    """Kernel evaluated at t <= 0."""


class BoundViolation(ConeSmoothError):
    """Kernel certification failed: a certified maximum exceeds the limit.

    The library must not proceed with an uncertified kernel; catching this
    error and continuing anyway is a bug in the caller.
    """

    def __init__(self, message, witness_t=None, derivative=None):
        self.witness_t = witness_t
        self.derivative = derivative
        super().__init__(message)


class OutOfDomainError(ConeSmoothError):
    """Radius outside the (0, inf) polar domain."""


class StepTooLargeError(ConeSmoothError):
    """Finite-difference step too large for the requested radius."""


class QuadratureFailure(ConeSmoothError):
    """Adaptive quadrature exhausted its interval budget before converging."""


# ---------------------------------------------------------------------------
# Certification

class DegenerateTriangleError(ConeSmoothError):
    """Triangle lengths describe a flat or inverted triangle."""

    def __init__(self, lengths):
        self.lengths = tuple(lengths)
        super().__init__(f"lengths {self.lengths} describe a degenerate triangle")


# ---------------------------------------------------------------------------
# Assembly

class BoundaryNotSupportedError(ConeSmoothError):
    """Smoothing is defined for closed surfaces only."""

    def __init__(self, boundary_vertices):
        self.boundary_vertices = tuple(boundary_vertices)
        super().__init__(
            f"surface has boundary vertices {self.boundary_vertices}; "
            "smoothing requires a closed surface"
        )


class BadWeightsError(ConeSmoothError):
    """Blend weights are not a convex combination."""


class NotPositiveDefiniteError(ConeSmoothError):
    """A quadratic form expected to be positive definite is not."""
