"""Exceptions raised by safe-admittance."""


class SafeAdmittanceError(Exception):
    """Base class for all package errors."""


class ConfigRejected(SafeAdmittanceError):
    """A scenario failed validation or a design pre-check."""


class NotHurwitz(ConfigRejected):
    """A subsystem matrix has an eigenvalue with nonnegative real part."""


class Underdamped(ConfigRejected):
    """Complex eigenvalues; the closed-form error bounds do not apply."""


class StructureMismatch(ConfigRejected):
    """A matrix does not have the block structure an operation requires."""


class LogFormatError(ConfigRejected):
    """A trajectory CSV does not follow the trajectory log schema."""


class ConditionViolated(ConfigRejected):
    """The safety subsystem cannot overpower the worst-case force on an axis."""

    def __init__(self, axis: int, margin: float):
        self.axis = axis
        self.margin = margin
        super().__init__(
            f"A2 condition violated on axis {axis + 1}: margin {margin:.6g} < 0"
        )


class NoCommonP(ConfigRejected):
    """No common quadratic Lyapunov matrix was found for the subsystem pair."""

    def __init__(self, best_margin: float):
        self.best_margin = best_margin
        super().__init__(f"no common Lyapunov matrix found (best margin {best_margin:.6g})")


class SingularInertia(SafeAdmittanceError):
    """The manipulator inertia matrix could not be inverted."""


class NonInvertibleMass(SafeAdmittanceError):
    """The virtual mass matrix could not be inverted."""


class NumericalDivergence(SafeAdmittanceError):
    """A simulated state left the admissible numeric range."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"numerical divergence at t = {t:.6g} s")
