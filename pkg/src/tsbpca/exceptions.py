"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad data, bad
configuration, unparseable files) and :class:`NumericalError` (the
algorithm itself could not proceed). The command line maps them to
distinct exit codes.
"""


class TSBPCAError(Exception):
    """Base class for every error raised by this package."""


class InputError(TSBPCAError, ValueError):
    """Invalid data, configuration or file contents."""


class NumericalError(TSBPCAError, ArithmeticError):
    """The numerical procedure failed on otherwise valid input."""


class NonFinite(InputError):
    def __init__(self, index):
        self.index = tuple(int(i) for i in index)
        super().__init__(f"non-finite value at index {self.index}")


class ShapeMismatch(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class BadDimensions(InputError):
    pass


class BadCounter(InputError):
    pass


class ConfigError(InputError):
    pass


class NotSymmetric(InputError):
    pass


class NotOrthonormal(InputError):
    pass


class ZeroData(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class Unlabeled(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MissingCell(InputError):
    def __init__(self, instance, time):
        self.instance = instance
        self.time = time
        super().__init__(f"missing row for instance {instance}, time {time}")


class RaggedRow(ParseError):
    pass


class InconsistentLabel(InputError):
    def __init__(self, instance):
        self.instance = instance
        super().__init__(f"instance {instance} carries more than one label")


class UnsupportedFeature(InputError):
    pass


class MetadataMissing(InputError):
    pass


class RankDeficient(NumericalError):
    """The power-iteration iterate lost column rank.

    ``time_index`` is filled in by the caller once the offending time
    point is known.
    """

    def __init__(self, message, time_index=None):
        self.time_index = time_index
        super().__init__(message)
