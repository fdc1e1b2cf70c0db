"""Exception types raised across the package."""


class BifurkError(Exception):
    """Base class for all package errors."""


class RootHasNoMother(BifurkError, ValueError):
    pass


class TreeOverflow(BifurkError, OverflowError):
    """A depth or label exceeds the 2**63 - 1 node cap."""


class InvalidParameters(BifurkError, ValueError):
    pass


class InvalidDistribution(BifurkError, ValueError):
    pass


class EmptySelection(BifurkError, ValueError):
    """No observed node (or complete triangle) in the requested index set."""


class IncompleteTree(BifurkError, ValueError):
    pass


class InsufficientData(BifurkError, ValueError):
    pass


class DegenerateDesign(BifurkError, ValueError):
    """Mothers of a branch have zero sample variance."""


class ZeroVariance(BifurkError, ValueError):
    pass


class DegenerateVariance(BifurkError, ValueError):
    """A test statistic's variance estimate is not strictly positive."""


class UnstableFit(BifurkError, ValueError):
    pass


class DataError(BifurkError, ValueError):
    """Malformed lineage or parameter file."""


class ParseError(DataError):
    def __init__(self, line, message="cannot parse row"):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateId(DataError):
    def __init__(self, cell_id):
        self.cell_id = cell_id
        super().__init__(f"duplicate cell_id {cell_id}")


class NonPositiveId(DataError):
    def __init__(self, cell_id):
        self.cell_id = cell_id
        super().__init__(f"cell_id must be >= 1, got {cell_id}")


class NonFiniteValue(DataError):
    def __init__(self, line):
        self.line = line
        super().__init__(f"line {line}: value is not finite")
