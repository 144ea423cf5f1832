"""Exception hierarchy.

Data errors (bad input files, schema problems) derive from ``DataError`` so
the CLI can map them to exit code 2; everything else is a plain
``FlowGauntletError``.
"""


class FlowGauntletError(Exception):
    pass


class DataError(FlowGauntletError):
    pass


class ConfigError(FlowGauntletError):
    """Bad or missing configuration key. ``key`` names the offender."""

    def __init__(self, key, message=None):
        self.key = key
        super().__init__(message or f"invalid configuration key: {key}")


class MissingColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing column: {column}")


class NonNumericCell(DataError):
    def __init__(self, row, column, value=None):
        self.row = row
        self.column = column
        super().__init__(f"non-numeric value {value!r} at row {row}, column {column}")


class EmptyFile(DataError):
    pass


class EmptyPartition(DataError):
    pass


class TooFewRecords(DataError):
    pass


class ScaleMismatch(FlowGauntletError):
    pass


class EmptyInput(FlowGauntletError):
    pass


class LengthMismatch(FlowGauntletError):
    pass


class FeatureMismatch(FlowGauntletError):
    pass


class WrongModelKind(FlowGauntletError):
    pass


class NonStandardizedInput(FlowGauntletError):
    pass


class UnknownFeature(FlowGauntletError):
    pass


class EmptyScores(FlowGauntletError):
    pass
