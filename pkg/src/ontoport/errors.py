"""Exception hierarchy shared by the pipeline stages."""


class OntoportError(Exception):
    """Base class for every error raised by this package."""


class DataError(OntoportError):
    """Input data is invalid. The CLI maps these to exit code 2."""


class MalformedRow(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateMark(DataError):
    def __init__(self, student_id: str):
        super().__init__(f"student {student_id!r} graded more than once")
        self.student_id = student_id


class EmptyLog(DataError):
    pass


class NoGradedStudents(DataError):
    pass


class OutOfRangeMark(DataError):
    pass


class DuplicateAction(DataError):
    def __init__(self, name: str):
        super().__init__(f"action {name!r} mapped more than once")
        self.name = name


class UnknownCategory(DataError):
    def __init__(self, name: str):
        super().__init__(f"unknown category {name!r}")
        self.name = name


class EmptyTaxonomy(DataError):
    pass


class EmptyDataset(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class SingleClassDataset(DataError):
    pass


class TooFewInstances(DataError):
    pass


class InvalidSpec(DataError):
    pass
