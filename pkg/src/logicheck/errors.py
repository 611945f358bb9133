"""Exception hierarchy for the logicheck toolkit.

Input-side problems (bad sources, bad files, degenerate statistics input)
derive from InputError and map to CLI exit code 1; worker/protocol problems
derive from WorkerError and map to exit code 2.
"""


class LogicheckError(Exception):
    """Base class for all toolkit errors."""


class InputError(LogicheckError):
    """Bad user-supplied data: sources, files, CLI arguments, config."""


class ParseError(InputError):
    """Syntax error in a formal source string.

    Carries the byte offset of the failure and a hint naming the token
    class that was expected there.
    """

    def __init__(self, message: str, offset: int, expected: str | None = None):
        self.offset = offset
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at offset {offset}{hint}")


class LexiconFormatError(InputError):
    """Malformed lexicon or template file row."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


class DuplicateTokenError(LexiconFormatError):
    """Two lexicon rows claim the same formal token for one dialect."""


class MissingPhraseError(InputError):
    """A parse keyword has no linearization phrase or template."""

    def __init__(self, keyword: str):
        self.keyword = keyword
        super().__init__(f"no linearization phrase for keyword {keyword!r}")


class EmptyCorpusError(InputError):
    """Corpus scoring was asked to average over zero pairs."""


class DegenerateInputError(InputError):
    """Statistics input with too few points or zero variance."""


class LengthMismatchError(InputError):
    """Paired series of unequal length."""


class UnknownSeedError(InputError):
    """A perturbation references a seed id that is not in the seed set."""


class MissingScoreError(InputError):
    """An operation required an evaluator score that is absent."""


class EmptyBeamError(InputError):
    """Beam reranking received no candidates."""


class ConfigError(InputError):
    """Malformed run-config file or unusable config value."""


class WorkerError(LogicheckError):
    """Base class for worker transport and protocol failures."""


class WorkerProtocolError(WorkerError):
    """Malformed worker response, id mismatch, or contract violation."""


class WorkerTimeoutError(WorkerError):
    """A worker failed to answer within the configured deadline."""
