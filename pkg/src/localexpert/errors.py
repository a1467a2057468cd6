"""Exception hierarchy shared by every stage of the pipeline."""
from __future__ import annotations


class LocalExpertError(Exception):
    """Base class for all data-level failures (CLI exit code 2)."""


class NotFoundError(LocalExpertError, KeyError):
    def __init__(self, kind: str, key: str):
        self.kind = kind
        self.key = key
        super().__init__(f"unknown {kind}: {key!r}")

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


class DomainError(LocalExpertError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class DataError(LocalExpertError, ValueError):
    """Records contradict each other."""


class UnknownQueryError(LocalExpertError, LookupError):
    def __init__(self, text: str, known: list[str]):
        self.text = text
        self.known = sorted(known)
        super().__init__(
            f"unknown query {text!r}; supported queries: " + ", ".join(self.known)
        )


class IngestError(LocalExpertError):
    """Dataset files could not be loaded; ``report`` lists every violation."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
