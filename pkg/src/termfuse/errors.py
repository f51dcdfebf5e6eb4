"""Exception taxonomy shared by every termfuse module.

All errors raised by the library derive from TermfuseError, so callers can
catch one base class at a process boundary.  Syntax-level errors carry the
offending line number where one is known.
"""

from __future__ import annotations


class TermfuseError(Exception):
    """Base class for every error raised by this package."""


# --- XML / GMT dialect ------------------------------------------------------

class XmlError(TermfuseError):
    """The input is not well-formed XML at all."""


class DialectError(TermfuseError):
    """Well-formed XML that breaks the GMT dialect rules."""


class LevelError(DialectError):
    """A struct carries a type outside the meta-model vocabulary."""


class MappingError(TermfuseError):
    """A GMT tree or pointer cannot be mapped onto the data model."""


class NotFound(TermfuseError):
    """An identifier or pointer target does not exist."""


class AmbiguousId(TermfuseError):
    """A shorthand pointer matches more than one node."""


# --- model ------------------------------------------------------------------

class DuplicateId(TermfuseError):
    """An identifier is already registered in the collection."""


class InvariantViolation(TermfuseError):
    """A structural rule of the meta-model does not hold.

    Doubles as the record type returned by check_structure, in which case it
    is reported rather than raised.
    """

    def __init__(self, node_id: str, rule: str, message: str):
        super().__init__(f"{node_id}: [{rule}] {message}")
        self.node_id = node_id
        self.rule = rule
        self.message = message

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.node_id, self.rule, self.message)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InvariantViolation):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __repr__(self) -> str:
        return f"InvariantViolation{self.as_tuple()!r}"


# --- data category selections -----------------------------------------------

class DcsSyntaxError(TermfuseError):
    """A DCS or mapping file line cannot be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateCategory(DcsSyntaxError):
    """The same category name is declared twice in one selection."""


class BadPicklist(DcsSyntaxError):
    """A picklist declaration is empty or attached to the wrong datatype."""


# --- source ingestion ---------------------------------------------------------

class TsfSyntaxError(TermfuseError):
    """A term source file line cannot be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateNativeId(TsfSyntaxError):
    """Two records in one source file share a native identifier."""


class DanglingReference(TermfuseError):
    """A record points at a native identifier that does not exist."""


# --- fusion -------------------------------------------------------------------

class RegistryClash(TermfuseError):
    """Two input collections register the same (institution, database)."""


# --- termbase services --------------------------------------------------------

class UnknownSource(TermfuseError):
    """The requested institution or database is not in the registry."""


class NoTermsInLanguages(TermfuseError):
    """A query expansion matched an entry but none of the asked languages."""


# --- command line ---------------------------------------------------------------

class ConfigError(TermfuseError):
    """A workspace configuration file or value is unusable."""
