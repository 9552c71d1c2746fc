"""Application error types mapped to CLI exit codes."""


class DataError(Exception):
    """Bad or missing input data: files, formats, mismatched ids. Exit code 2."""


class NumericError(Exception):
    """Numeric failure: NaN/Inf intermediates, divergence. Exit code 3."""
