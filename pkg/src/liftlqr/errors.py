"""Exception hierarchy shared by all solver modules."""


class LiftLQRError(Exception):
    """Base class for every error raised by liftlqr."""


class DimensionMismatch(LiftLQRError, ValueError):
    pass


class ValidationError(LiftLQRError, ValueError):
    """Raised when a periodic system violates its weight invariants.

    ``report`` carries the full :class:`~liftlqr.model.ValidationReport`.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class NonConvergence(LiftLQRError):
    pass


class UnitCircleEigenvalue(LiftLQRError):
    """An eigenvalue lies inside the classification annulus around |z| = 1."""

    def __init__(self, eigenvalue, margin):
        self.eigenvalue = eigenvalue
        self.margin = margin
        super().__init__(
            f"eigenvalue {eigenvalue:.6g} (|z|={abs(eigenvalue):.12g}) lies within "
            f"{margin:g} of the unit circle; no stabilizing solution can be separated"
        )


class SingularMatrix(LiftLQRError):
    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")


class IllConditionedSubspace(SingularMatrix):
    pass


class SingularInnovation(SingularMatrix):
    pass


class SingularStateMatrix(SingularMatrix):
    def __init__(self, phase, condition=float("inf")):
        self.phase = phase
        super().__init__(f"A_{phase} is numerically singular", condition)


class NoStabilizingSolution(LiftLQRError):
    pass


class NonDiagonalWeights(LiftLQRError, ValueError):
    pass


class DoublingDivergence(LiftLQRError):
    pass


class GenerationFailed(LiftLQRError):
    pass
