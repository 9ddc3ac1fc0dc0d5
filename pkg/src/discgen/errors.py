"""Exception types raised across the package."""


class DiscgenError(Exception):
    """Base class for every error raised by discgen."""


# --- ingestion -----------------------------------------------------------

class MissingColumn(DiscgenError, KeyError):
    def __init__(self, column):
        super().__init__(column)
        self.column = column

    def __str__(self):
        return f"missing column {self.column!r}"


class UnparseableCell(DiscgenError, ValueError):
    def __init__(self, row, col, value=None):
        super().__init__(row, col, value)
        self.row, self.col, self.value = row, col, value

    def __str__(self):
        return f"row {self.row}, column {self.col!r}: cannot parse {self.value!r}"


class InvariantViolation(DiscgenError, ValueError):
    def __init__(self, row, reason):
        super().__init__(row, reason)
        self.row, self.reason = row, reason

    def __str__(self):
        return f"row {self.row}: {self.reason}"


class EmptyFile(DiscgenError, ValueError):
    pass


class ManifestParseError(DiscgenError, ValueError):
    pass


class DatasetFileMissing(DiscgenError, FileNotFoundError):
    def __init__(self, name, path=None):
        super().__init__(name, path)
        self.name, self.path = name, path

    def __str__(self):
        return f"dataset {self.name!r}: file not found ({self.path})"


class CountMismatch(DiscgenError, ValueError):
    def __init__(self, name, expected, actual):
        super().__init__(name, expected, actual)
        self.name, self.expected, self.actual = name, expected, actual

    def __str__(self):
        return f"dataset {self.name!r}: manifest expects {self.expected} records, file has {self.actual}"


# --- fitting -------------------------------------------------------------

class DegenerateSample(DiscgenError, ValueError):
    pass


class NonPositiveSample(DiscgenError, ValueError):
    def __init__(self, index):
        super().__init__(index)
        self.index = index

    def __str__(self):
        return f"sample {self.index} is not strictly positive"


class NoViableCandidate(DiscgenError, ValueError):
    pass


# --- generation / training -----------------------------------------------

class RejectionOverflow(DiscgenError, RuntimeError):
    pass


class ShapeMismatch(DiscgenError, ValueError):
    pass


class NonFiniteGradient(DiscgenError, FloatingPointError):
    pass


class DivergenceDetected(DiscgenError, FloatingPointError):
    pass


class ProbabilityOutOfRange(DiscgenError, ValueError):
    pass


class StepOutOfRange(DiscgenError, IndexError):
    pass


# --- metrics -------------------------------------------------------------

class EmptySample(DiscgenError, ValueError):
    pass


class TooFewBins(DiscgenError, ValueError):
    pass


class ConstantInput(DiscgenError, ValueError):
    pass
