"""Exception hierarchy. Every error carries a stable machine-readable code
that the CLI prints on stderr and the HTTP service returns in 422 bodies."""


class ScaffoldError(Exception):
    """Base class for all domain errors."""

    code = "SCAFFOLD_ERROR"


class ParseError(ScaffoldError):
    code = "PARSE_ERROR"


class EmptyDocumentError(ScaffoldError):
    code = "EMPTY_DOCUMENT"


class DegenerateError(ScaffoldError):
    """Flattening produced fewer than 3 distinct vertices."""

    code = "DEGENERATE_PATH"


class ValidationError(ScaffoldError):
    """Clipart failed structural validation (open/self-intersecting paths)."""

    code = "INVALID_CLIPART"


class BadReferenceError(ScaffoldError):
    code = "BAD_REFERENCE"


class CycleError(ScaffoldError):
    code = "CONSTRAINT_CYCLE"


class ConflictError(ScaffoldError):
    code = "CONSTRAINT_CONFLICT"


class FormatError(ScaffoldError):
    code = "FORMAT_ERROR"


class EmptyShapeError(ScaffoldError):
    code = "EMPTY_SHAPE"


class DegeneratePointsError(ScaffoldError):
    code = "DEGENERATE_POINTS"


class ClusterError(ScaffoldError):
    code = "CLUSTER_ERROR"


class InfeasibleError(ScaffoldError):
    code = "INFEASIBLE"


class TriangulationError(ScaffoldError):
    code = "TRIANGULATION_ERROR"
