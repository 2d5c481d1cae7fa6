# Import libraries
from typing import Any


class LandscapeError(Exception):
    pass


class PotentialSpecError(LandscapeError):
    def __init__(self, message: str, data: Any | None = None):
        self.message = message
        self.data = data
        super().__init__(f"Invalid potential description: {message}")


class AbstractModeError(LandscapeError):
    def __init__(self, operation: str):
        self.operation = operation
        super().__init__(
            f"'{operation}' needs U between critical points; the potential only stores critical values"
        )


class DegenerateCriticalPoint(LandscapeError):
    def __init__(self, position: float, curvature: float):
        self.position = position
        self.curvature = curvature
        super().__init__(
            f"Degenerate critical point at x={position:.12g} (|U''|={abs(curvature):.3e})"
        )


class NoCriticalPoints(LandscapeError):
    def __init__(self, tilt: float):
        self.tilt = tilt
        super().__init__(
            f"U is strictly monotone (tilt={tilt:.6g}); the energy landscape is identically zero"
        )


class InconsistentBoundaryData(LandscapeError):
    def __init__(self, residuals: list[float]):
        self.residuals = residuals
        worst = max((abs(r) for r in residuals), default=0.0)
        super().__init__(
            f"Boundary data violate the discrete weak KAM relation (max residual {worst:.3e})"
        )


class NotCriticalAnchor(LandscapeError):
    def __init__(self, anchor: float):
        self.anchor = anchor
        super().__init__(
            f"Anchor x={anchor:.12g} is not a critical point; use mane_potential instead"
        )


class SingleStateChain(LandscapeError):
    def __init__(self):
        super().__init__(
            "A single well gives a one-state chain with a zero generator; at least two minima are needed"
        )


class GridResolutionError(LandscapeError):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class SchemeError(LandscapeError):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)
