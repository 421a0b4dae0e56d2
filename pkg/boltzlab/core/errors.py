"""
Exception hierarchy for boltzlab.

Configuration problems map to CLI exit code 1, numerical failures to exit
code 2.
"""


class BoltzLabError(Exception):
    """Base exception for all boltzlab errors."""
    pass


class ConfigError(BoltzLabError, ValueError):
    """Custom exception for malformed or incomplete run configuration."""
    pass


class KineticParamsError(BoltzLabError, ValueError):
    """Raised for kinetic parameters outside the admissible range."""
    pass


class DensityError(BoltzLabError, ValueError):
    """Raised for invalid densities or failed macroscopic checks."""
    pass


class KineticSingularityError(BoltzLabError, ValueError):
    """Raised when the kinetic factor is evaluated at zero relative speed for gamma < 0."""
    pass


class GeometryError(BoltzLabError, ValueError):
    """Raised for degenerate collision pairs or points outside an admissible set."""
    pass


class NumericalError(BoltzLabError):
    """Base exception for numerical failures."""
    pass


class QuadratureError(NumericalError):
    """Raised when a quadrature fails to converge or is internally inconsistent."""
    pass


class SolverError(NumericalError):
    """Raised when the particle solver cannot advance, e.g. majorant overflow."""
    pass
