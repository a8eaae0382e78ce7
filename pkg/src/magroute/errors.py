"""Error taxonomy shared across the package.

ConfigurationError: bad shapes, bad options, impossible requests.
DataFormatError: malformed input files.
NumericError: non-finite values or domain violations inside a computation.

The CLI maps these onto exit codes (2 usage / 3 data format / 4 numeric).
"""


class ConfigurationError(ValueError):
    pass


class DataFormatError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass
