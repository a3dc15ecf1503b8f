"""Spread-spectrum watermarking for neural-network parameter vectors.

Embed a secret payload into model weights with per-bit pseudo-random
spreading codes and rate-1/2 error correction, verify its presence through
preamble-calibrated correlation and belief-propagation decoding, and stress
it with removal attacks (pruning, perturbation, neuron shuffling) plus
shuffle recovery.
"""

from .errors import (
    AccuracyError,
    BaselineMismatchError,
    CapacityError,
    ChannelLostError,
    CodeConstructionError,
    DegenerateNeuronError,
    EmbedError,
    EmptyCodeError,
    EncodeError,
    ExtractError,
    FormatError,
    KeyFormatError,
    RecoveryFailedError,
    SelectionError,
    ShuffleError,
    TattooedError,
)
from .keying import (
    CodeStream,
    SecretKey,
    SeedPair,
    derive_seeds,
    generate_preamble,
    select_parameters,
    spreading_code,
)
from .ldpc import LdpcCode, SoftWord, build_code, decode, encode
from .model_io import (
    ParameterVector,
    TensorContainer,
    flatten,
    load,
    save,
    synth_model,
    unflatten,
)
from .spread import ChannelEstimate, EmbedJob, embed, estimate_channel, extract
from .watermark import (
    DEFAULT_GAMMA_GRID,
    DECISION_THRESHOLD,
    MarkRecord,
    VerifyReport,
    WatermarkPayload,
    gamma_sweep,
    mark,
    verify,
    watermark_accuracy,
)
from .attacks import (
    AttackSpec,
    PruneStrategy,
    perturb,
    prune,
    run_pruning_sweep,
    shuffle_model,
)
from .unshuffle import (
    PermutationMap,
    cosine_matrix,
    recover_permutation,
    unshuffle_model,
)

__version__ = "0.1.0"
