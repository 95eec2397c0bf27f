"""Exception types shared across the package."""


class AperiodError(Exception):
    """Base class for all package-specific errors."""


class ModelError(AperiodError):
    """Invalid model specification (bad spectrum, gains, mode tables...)."""


class GridError(AperiodError):
    """Off-grid time, misaligned shift, window overflow or grid mismatch."""


class BindingError(AperiodError):
    """Path ensemble used with a noise ensemble it was not driven by."""


class ContractionError(AperiodError):
    """Fixed-point solve refused because the contraction condition fails."""

    def __init__(self, kappa: float):
        self.kappa = kappa
        super().__init__(
            f"contraction constant kappa={kappa:.6g} is not < 1; "
            "the bounded-solution solve is not applicable"
        )


class DivergenceError(AperiodError):
    """Integration produced non-finite values or exceeded the norm ceiling."""


class ConfigError(AperiodError):
    """Malformed or inconsistent run configuration (carries field context)."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"[{field}] {message}"
        super().__init__(message)
