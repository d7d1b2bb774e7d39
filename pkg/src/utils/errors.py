"""Exception hierarchy shared by every randspec module."""
from typing import Optional


class RandSpecError(Exception):
    """Base class for all library errors."""


# ============================================================
# Shapes and spaces
# ============================================================
class DimensionMismatch(RandSpecError, ValueError):
    pass


class SpaceMismatch(RandSpecError, ValueError):
    pass


class InvalidMatrix(RandSpecError, ValueError):
    pass


class InvalidSampleSpace(RandSpecError, ValueError):
    pass


class InvalidParameter(RandSpecError, ValueError):
    pass


# ============================================================
# Matrix kernels
# ============================================================
class NotHermitian(RandSpecError, ValueError):
    def __init__(self, residual: float, atom: Optional[str] = None):
        self.residual = residual
        self.atom = atom
        where = f" at atom {atom}" if atom is not None else ""
        super().__init__(f"matrix is not Hermitian{where} (residual {residual:.3e})")


class NotNormal(RandSpecError, ValueError):
    def __init__(self, residual: float, atom: Optional[str] = None):
        self.residual = residual
        self.atom = atom
        where = f" at atom {atom}" if atom is not None else ""
        super().__init__(f"matrix is not normal{where} (commutator residual {residual:.3e})")


class NotPSD(RandSpecError, ValueError):
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")


class SingularMatrix(RandSpecError, ValueError):
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"matrix is singular within tolerance (smallest eigenvalue {min_eigenvalue:.3e})")


class NoConvergence(RandSpecError):
    pass


# ============================================================
# Operator fields and measures
# ============================================================
class HypothesisViolated(RandSpecError, ValueError):
    def __init__(self, hypothesis: str, atom: Optional[str], residual: float):
        self.hypothesis = hypothesis
        self.atom = atom
        self.residual = residual
        super().__init__(
            f"hypothesis '{hypothesis}' fails at atom {atom} (residual {residual:.3e})"
        )


class IncompleteMap(RandSpecError, ValueError):
    def __init__(self, cell_id: str, reason: str = "has no image"):
        self.cell_id = cell_id
        super().__init__(f"cell {cell_id!r} {reason}")


class CellCoverage(RandSpecError, ValueError):
    def __init__(self, atom: str, eigenvalue: complex):
        self.atom = atom
        self.eigenvalue = eigenvalue
        super().__init__(f"eigenvalue {eigenvalue} at atom {atom} lies in no cell")


# ============================================================
# Spectral integrals
# ============================================================
class UnboundedIntegrand(RandSpecError, ValueError):
    def __init__(self, cell_id: str):
        self.cell_id = cell_id
        super().__init__(f"integrand is infinite on cell {cell_id!r} which carries nonzero mass")


class NotAEFinite(RandSpecError, ValueError):
    def __init__(self, cell_id: str):
        self.cell_id = cell_id
        super().__init__(f"function is infinite on non-null cell {cell_id!r}")


class DomainViolation(RandSpecError, ValueError):
    pass


class InvalidBoundingSequence(RandSpecError, ValueError):
    pass


# ============================================================
# Transforms
# ============================================================
class NotPureContraction(RandSpecError, ValueError):
    def __init__(self, norm: float, atom: Optional[str] = None):
        self.norm = norm
        self.atom = atom
        where = f" at atom {atom}" if atom is not None else ""
        super().__init__(f"operator is not a pure contraction{where} (norm {norm:.15g})")


class OutOfDisc(RandSpecError, ValueError):
    def __init__(self, value: complex):
        self.value = value
        super().__init__(f"{value} lies outside the open unit disc margin")


# ============================================================
# Scenario I/O
# ============================================================
class ParseError(RandSpecError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class SchemaError(RandSpecError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class ShapeError(RandSpecError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
