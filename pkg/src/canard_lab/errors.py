"""Exception hierarchy shared by all canard-lab modules."""


class CanardLabError(Exception):
    """Base class for every error raised by this package."""


class ExpressionSyntaxError(CanardLabError):
    """Malformed expression text. Carries the 0-based offset of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationError(CanardLabError):
    """Division by zero (or other non-finite result) while evaluating an expression."""


class OrderDetectionError(CanardLabError):
    """Vanishing order at x = 0 exceeds the detection cap."""


class InvalidSystemError(CanardLabError):
    """System rejected because one or more standing assumptions fail."""


class RangeError(CanardLabError):
    """Requested height / abscissa lies outside the reachable branch range."""


class SingularIntegrandError(CanardLabError):
    """The divergence integrand hit a zero of the slow component away from the contact point."""


class AccuracyError(CanardLabError):
    """Quadrature or cross-check failed to reach the configured tolerance."""


class ConvergenceError(CanardLabError):
    """Iteration failed to converge within its budget."""


class BracketError(CanardLabError):
    """Root bracket invalid: both endpoints classify the same way."""


class StiffnessError(CanardLabError):
    """Integrator step size underflowed. Carries the last accepted state."""

    def __init__(self, message: str, t: float, x: float, y: float):
        super().__init__(f"{message} (t={t!r}, x={x!r}, y={y!r})")
        self.t = t
        self.x = x
        self.y = y


class TransitionError(CanardLabError):
    """Orbit failed to cross the exit section."""


class ConfigError(CanardLabError):
    """Config file rejected. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
