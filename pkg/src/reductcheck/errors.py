"""Exception types shared across the verification modules."""


class DomainViolation(ValueError):
    """Input state lies outside the declared validity domain."""


class NumericalBlowup(RuntimeError):
    """State became non-finite (or drifted past hard bounds) during evolution."""


class CompositionError(ValueError):
    """Bridge maps cannot be composed (state-space mismatch)."""


class ConfigurationError(ValueError):
    """Scenario or check configuration is invalid."""
