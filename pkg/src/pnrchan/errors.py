"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, I/O
problems exit 2, failed numerical certification exits 3.
"""


class PnrchanError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ValidationError(PnrchanError, ValueError):
    """Invalid parameters, malformed input files, or inconsistent requests."""

    exit_code = 1


class CalibrationError(PnrchanError):
    """Parameter calibration could not be solved; message carries diagnostics."""

    exit_code = 1


class NumericsError(PnrchanError):
    """A numerical certificate (tail mass, quadrature error) exceeded tolerance."""

    exit_code = 3
