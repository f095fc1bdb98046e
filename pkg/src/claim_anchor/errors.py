"""Exception types shared across the pipeline.

Two broad families matter for the CLI exit code: ValidationError (bad
inputs or config, exit 1) and everything else raised mid-run (exit 2).
"""


class ClaimAnchorError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClaimAnchorError):
    """Input files, arguments, or config failed validation."""


class MissingColumn(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"required column missing: {name!r}")
        self.name = name


class DuplicateId(ValidationError):
    def __init__(self, id_: str, row: int):
        super().__init__(f"duplicate id {id_!r} at data row {row}")
        self.id = id_
        self.row = row


class MalformedRow(ValidationError):
    def __init__(self, row: int, detail: str = ""):
        msg = f"malformed data row {row}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.row = row


class NotUtf8(ValidationError):
    def __init__(self, path: str):
        super().__init__(f"file is not valid UTF-8: {path}")
        self.path = path


class DimensionMismatch(ValidationError):
    def __init__(self, detail: str):
        super().__init__(f"vector dimension mismatch: {detail}")


class MalformedVector(ValidationError):
    def __init__(self, id_: str, detail: str = ""):
        msg = f"malformed vector for id {id_!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.id = id_


class ZeroNorm(ValidationError):
    def __init__(self, detail: str = "vector has zero norm"):
        super().__init__(detail)


class MissingRewrite(ValidationError):
    def __init__(self, post_id: str, kind: str):
        super().__init__(f"no {kind} rewrite for post_id {post_id!r}")
        self.post_id = post_id
        self.kind = kind


class EmptyGold(ValidationError):
    def __init__(self):
        super().__init__("gold mapping is empty; nothing to evaluate")


class PositionOutOfRange(ClaimAnchorError):
    def __init__(self, position: int, n_docs: int):
        super().__init__(f"document position {position} out of range for {n_docs} documents")


class UnknownDocId(ClaimAnchorError):
    def __init__(self, doc_id: str):
        super().__init__(f"candidate doc_id {doc_id!r} not in corpus")
        self.doc_id = doc_id


class ScorerFailure(ClaimAnchorError):
    """Reranking failed; the pipeline never silently falls back to retrieval order."""

    def __init__(self, detail: str):
        super().__init__(f"scorer failure: {detail}")


class ScorerTimeout(ClaimAnchorError):
    def __init__(self, timeout_ms: int):
        super().__init__(f"no response from scorer within {timeout_ms} ms")


class ProtocolError(ClaimAnchorError):
    def __init__(self, detail: str):
        super().__init__(f"scoring protocol violation: {detail}")


class RemoteError(ClaimAnchorError):
    """Error frame returned by the scoring process, message passed through."""

    def __init__(self, message: str):
        super().__init__(message)


class StageError(ClaimAnchorError):
    """Wraps an error raised by a pipeline stage, tagging which stage failed."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
