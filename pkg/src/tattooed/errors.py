"""Exception hierarchy for the tattooed package.

Every domain error derives from :class:`TattooedError` so callers can catch
the whole family with one clause; the CLI maps each class to a distinct exit
code.
"""


class TattooedError(Exception):
    """Base class for all tattooed errors."""


class KeyFormatError(TattooedError):
    """Secret key material has the wrong length or encoding."""


class EmptyCodeError(TattooedError):
    """A spreading code of length zero was requested."""


class SelectionError(TattooedError):
    """Parameter-selection ratio outside (0, 1] or empty selection."""


class CodeConstructionError(TattooedError):
    """No full-rank parity-check matrix found within the retry budget."""


class EncodeError(TattooedError):
    """Message length does not match the code dimension."""


class EmbedError(TattooedError):
    """Invalid embedding job (bad indices, non-positive strength)."""


class ExtractError(TattooedError):
    """Mismatched vectors handed to the correlator."""


class ChannelLostError(TattooedError):
    """Preamble correlation produced a non-positive gain.

    Raised by channel estimation when the watermark signal is absent or the
    wrong key was used.  Verification maps this to a negative decision
    instead of letting it escape.
    """

    def __init__(self, gain: float):
        super().__init__(f"non-positive channel gain {gain:g}")
        self.gain = gain


class CapacityError(TattooedError):
    """Payload too large for the selected parameter subset."""


class BaselineMismatchError(TattooedError):
    """Baseline weights do not match the hash stored in the mark record."""


class AccuracyError(TattooedError):
    """Bit vectors of different lengths compared for accuracy."""


class ShuffleError(TattooedError):
    """Model tensors do not form a permutable dense network."""


class DegenerateNeuronError(TattooedError):
    """A zero-norm neuron makes cosine similarity undefined."""


class RecoveryFailedError(TattooedError):
    """No consistent neuron matching above the similarity threshold."""

    def __init__(self, message: str, layer: int | None = None):
        super().__init__(message)
        self.layer = layer


class FormatError(TattooedError):
    """Malformed tensor container or record file."""
