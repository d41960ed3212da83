"""Exception types shared across the toolkit.

Every error raised on purpose derives from :class:`DockerspecError` so callers
(and the CLI) can map failures to exit codes without matching on strings.
"""


class DockerspecError(Exception):
    """Base class for all toolkit errors."""


class ParseError(DockerspecError):
    """Base class for input-text problems (exit code 1 in the CLI)."""


class MalformedInstruction(ParseError):
    """A logical line does not start with a known Dockerfile keyword."""

    def __init__(self, line_number: int, line: str):
        super().__init__(f"line {line_number}: no recognizable instruction keyword: {line!r}")
        self.line_number = line_number
        self.line = line


class EmptyInput(ParseError):
    """The input contains no instructions at all."""


class ShellSyntaxError(ParseError):
    """A RUN body could not be split into statements (unbalanced quotes,
    empty operand between connectors, here-document, ...)."""


class MalformedFrom(ParseError):
    """A FROM argument has no usable image name."""


class SchemaError(DockerspecError):
    """A serialized spec (or word-list file) violates its schema."""


class InferenceIncomplete(DockerspecError):
    """A sub-step of spec inference failed, so not all fields could be set
    (exit code 2 in the CLI)."""


class KindMismatch(DockerspecError):
    """Instruction similarity was requested for two different kinds."""


class TooFewEntries(DockerspecError):
    """Not enough corpus entries to produce an 80/10/10 split."""


class EmptyCorpus(DockerspecError):
    """An index or retrieval operation was attempted over zero documents."""


class EmptyCandidate(DockerspecError):
    """BLEU was asked to score an empty candidate token list."""


class EmptySample(DockerspecError):
    """A statistical test received an empty sample."""


class EmptyManifest(DockerspecError):
    """Layer comparison received an empty original digest list."""


class ConfigError(DockerspecError):
    """Bad CLI configuration: missing files, invalid flag values
    (exit code 3 in the CLI)."""
