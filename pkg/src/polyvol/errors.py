"""Exception taxonomy shared across the package.

Every domain error carries a short machine-readable ``code`` (also used by
the CLI's ``ERR <code> <detail>`` lines).
"""


class PolyvolError(Exception):
    """Base class for all domain errors."""

    code = "Error"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(detail)

    def __str__(self):
        if self.detail:
            return f"{self.code}: {self.detail}"
        return self.code


# --- mink-core -----------------------------------------------------------

class PoleNotHyperideal(PolyvolError):
    code = "PoleNotHyperideal"


class PlanesDisjointInBall(PolyvolError):
    code = "PlanesDisjointInBall"


class PlanesEqual(PolyvolError):
    code = "PlanesEqual"


class OutsideModel(PolyvolError):
    code = "OutsideModel"


class DegenerateDeformation(PolyvolError):
    code = "DegenerateDeformation"


# --- graphs ---------------------------------------------------------------

class NotPolyhedral(PolyvolError):
    code = "NotPolyhedral"


class CollapseMakesDegenerate(PolyvolError):
    code = "CollapseMakesDegenerate"

    def __init__(self, detail: str = "", partial=None):
        super().__init__(detail)
        self.partial = partial


class AngleOutOfRange(PolyvolError):
    code = "AngleOutOfRange"


class BadFormat(PolyvolError):
    code = "BadFormat"


# --- polyhedron -----------------------------------------------------------

class SkeletonMismatch(PolyvolError):
    code = "SkeletonMismatch"


class NonConvex(PolyvolError):
    code = "NonConvex"


class EdgeMissesBall(PolyvolError):
    code = "EdgeMissesBall"


class TooFewAngles(PolyvolError):
    code = "TooFewAngles"


class ImproperInput(PolyvolError):
    code = "ImproperInput"


# --- volume ---------------------------------------------------------------

class NotIdeal(PolyvolError):
    code = "NotIdeal"


class PathDiscontinuous(PolyvolError):
    code = "PathDiscontinuous"


# --- rectify --------------------------------------------------------------

class SolverDiverged(PolyvolError):
    code = "SolverDiverged"

    def __init__(self, detail: str = "", residual: float = float("nan")):
        super().__init__(detail)
        self.residual = residual


# --- flow -----------------------------------------------------------------

class NewtonDiverged(PolyvolError):
    code = "NewtonDiverged"


class SkeletonChanged(PolyvolError):
    code = "SkeletonChanged"

    def __init__(self, detail: str = "", witness=None):
        super().__init__(detail)
        self.witness = witness


class NoIdealVertices(PolyvolError):
    code = "NoIdealVertices"


class PropernessLost(PolyvolError):
    code = "PropernessLost"


class NoSeparatingPlane(PolyvolError):
    code = "NoSeparatingPlane"


class MaxEventsExceeded(PolyvolError):
    code = "MaxEventsExceeded"

    def __init__(self, detail: str = "", trace=None):
        super().__init__(detail)
        self.trace = trace


class StallDetected(PolyvolError):
    code = "StallDetected"

    def __init__(self, detail: str = "", trace=None):
        super().__init__(detail)
        self.trace = trace
