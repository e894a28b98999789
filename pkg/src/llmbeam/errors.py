"""Exception hierarchy shared across the package."""


class LlmBeamError(Exception):
    """Base class for all errors raised by this package."""


class EmissionsFormatError(LlmBeamError):
    """Emission file is malformed, mis-dimensioned, or not row-normalized."""


class VocabularyError(LlmBeamError):
    """Token list is empty after filtering, duplicated, or out of alphabet."""


class AlignmentError(LlmBeamError):
    """No feasible CTC path exists for the requested characters/window."""


class DecodeFailure(LlmBeamError):
    """Decoding could not produce any finished hypothesis.

    Carries the best partial hypothesis (may be None).
    """

    def __init__(self, message, best_partial=None):
        super().__init__(message)
        self.best_partial = best_partial


class RemoteLmError(LlmBeamError):
    """Base class for remote language-model failures."""


class RemoteTransportError(RemoteLmError):
    """Connection-level failure talking to the remote LM endpoint."""


class RemoteTimeoutError(RemoteLmError):
    """Remote LM did not answer within the configured timeout."""


class RemoteProtocolError(RemoteLmError):
    """Remote LM answered with a payload violating the wire protocol."""


class ConfigError(LlmBeamError):
    """Invalid run configuration (CLI exit code 2)."""


class DataMismatchError(LlmBeamError):
    """Reference/hypothesis utterance ids disagree (CLI exit code 3)."""
