"""Exception hierarchy shared by every pipeline stage.

Each error carries a stable machine-readable ``code`` so the CLI can emit
structured diagnostics and bindings can map failures onto host exceptions.
"""

from __future__ import annotations


class VidPromptError(Exception):
    """Base class for all library errors."""

    code = "error"

    def as_dict(self) -> dict:
        return {"code": self.code, "message": str(self)}


class ContractViolation(VidPromptError):
    """An operation was called with inputs that break its preconditions."""

    code = "contract-violation"


class EmptyMaskError(VidPromptError):
    """A binary mask with zero foreground pixels where one is required."""

    code = "empty-mask"


class DegenerateMaskError(VidPromptError):
    """Mask too small to host the requested prompt shape."""

    code = "degenerate-mask"


class EmptyMarkError(VidPromptError):
    """A prompt layer with no visible (alpha > 0) pixels where one is required."""

    code = "empty-mark"


class EmptyClipError(VidPromptError):
    """A video clip with zero frames."""

    code = "empty-clip"


class NoNegativesError(VidPromptError):
    """Robustness scoring needs at least one absent-target sample."""

    code = "no-negatives"


class EmptyCorpusError(VidPromptError):
    """Corpus-level text metrics need at least one candidate/reference pair."""

    code = "empty-corpus"


class NoTargetsError(VidPromptError):
    """Token cross-entropy with every position ignored."""

    code = "no-targets"


class EmptyDatasetError(VidPromptError):
    """Dataset root with no usable (video, object) groups."""

    code = "empty-dataset"


class EmptyObjectError(VidPromptError):
    """An annotated object whose mask is empty in every frame."""

    code = "empty-object"
