"""Exception types raised across the package.

Every error carries enough context (line, column, node pair, round) for the
CLI to print a structured message naming the failing case.
"""

from __future__ import annotations


class GraphTestError(Exception):
    """Base class for all data and computation errors."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ParseError(GraphTestError):
    code = "ParseError"

    def __init__(self, message: str, line: int, col: int | None = None):
        self.line = line
        self.col = col
        where = f"line {line}" if col is None else f"line {line}, column {col}"
        super().__init__(f"{where}: {message}")


class TooFewObservations(GraphTestError):
    code = "TooFewObservations"


class LabelCardinalityError(GraphTestError):
    code = "LabelCardinalityError"


class LengthMismatch(GraphTestError):
    code = "LengthMismatch"


class ShapeError(GraphTestError):
    code = "ShapeError"


class AsymmetryError(GraphTestError):
    code = "AsymmetryError"

    def __init__(self, i: int, j: int):
        self.i, self.j = i, j
        super().__init__(f"distance matrix is not symmetric at ({i}, {j})")


class NegativeDistance(GraphTestError):
    code = "NegativeDistance"

    def __init__(self, i: int, j: int):
        self.i, self.j = i, j
        super().__init__(f"negative distance at ({i}, {j})")


class SingularCovariance(GraphTestError):
    code = "SingularCovariance"


class InfeasibleK(GraphTestError):
    code = "InfeasibleK"

    def __init__(self, round_: int, message: str = ""):
        self.round = round_
        super().__init__(message or f"no feasible structure at round {round_}")


class DegenerateGraph(GraphTestError):
    code = "DegenerateGraph"


class DegenerateTable(GraphTestError):
    code = "DegenerateTable"


class CalibrationError(GraphTestError):
    code = "CalibrationError"


class IoError(GraphTestError):
    code = "IoError"


class InternalError(GraphTestError):
    code = "InternalError"
