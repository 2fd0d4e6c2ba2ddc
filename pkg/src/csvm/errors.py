"""Exception and warning types shared across the package."""


class CsvmError(Exception):
    """Base class for every error raised by this package."""


class CsvmWarning(UserWarning):
    """Recoverable oddities (duplicate keyword rows, truncated metadata, ...)."""


# --- parsing / model -------------------------------------------------------

class ParseError(CsvmError):
    pass


class MalformedRow(ParseError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantViolation(CsvmError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# --- table operations ------------------------------------------------------

class MissingColumn(CsvmError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing column"


class AmbiguousColumn(CsvmError):
    pass


class DuplicateHeaderWithinOneInput(CsvmError):
    pass


class LengthMismatch(CsvmError, ValueError):
    pass


class IndexOutOfRange(CsvmError, IndexError):
    pass


# --- converters ------------------------------------------------------------

class ConversionError(CsvmError):
    pass


class OddTokenCount(ConversionError):
    pass


class NonNumericCell(ConversionError):
    pass


class CountMismatch(ConversionError):
    pass


class BlockLongerThanData(ConversionError):
    pass


class ForeignKeyToUndeclaredTable(ConversionError):
    pass


# --- kinetics --------------------------------------------------------------

class KineticsError(CsvmError):
    pass


class DegenerateCurve(KineticsError):
    pass


class NonConvergence(KineticsError):
    pass


class InsufficientPoints(KineticsError):
    pass


class SingularDesign(KineticsError):
    pass


class NonPositiveSlope(KineticsError):
    pass


class MalformedResult(KineticsError):
    pass


class ModelError(KineticsError):
    """Problem in an ODE model table; ``row`` is the data-row index when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class MalformedExpression(ModelError):
    pass


class UnknownSpeciesInPath(ModelError):
    pass


class UnknownRateInExpression(ModelError):
    pass


class UnknownSpecies(ModelError):
    pass


class NegativeConcentration(KineticsError):
    pass


class NonFiniteState(KineticsError):
    pass
