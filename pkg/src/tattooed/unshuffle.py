"""Recover the original neuron ordering of a shuffled dense network.

Each hidden layer is matched against a reference model in its original
ordering by cosine similarity between neuron weight rows: an unmodified
shuffle produces a similarity matrix with exactly one 1.0 per row and
column, and the positions of those ones name the permutation.  Matching is
greedy row-argmax with uniqueness enforcement, falling back to a global
assignment when rows collide; recovered permutations are applied layer by
layer, first to last, because fixing layer i's rows is what makes layer
i+1's rows comparable again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateNeuronError, FormatError, RecoveryFailedError, ShuffleError
from .attacks import apply_neuron_permutations
from .model_io import TensorContainer, dense_layers

MIN_MATCH_SIMILARITY = 0.5


@dataclass(frozen=True)
class PermutationMap:
    """Recovered orderings: per_layer[i][j] is the shuffled row holding
    original neuron j of hidden layer i."""

    per_layer: list[np.ndarray]


def cosine_matrix(original_layer: np.ndarray, shuffled_layer: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between neuron rows of two equal-shape layers.

    Entry (i, j) compares original neuron i with shuffled neuron j:
    ``(A B^T) / (norm(A_i) * norm(B_j))``.
    """
    a = np.asarray(original_layer, dtype=np.float64)
    b = np.asarray(shuffled_layer, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise FormatError(f"layer shapes differ: {a.shape} vs {b.shape}")
    norm_a = np.sqrt(np.einsum("ij,ij->i", a, a))
    norm_b = np.sqrt(np.einsum("ij,ij->i", b, b))
    if (norm_a == 0).any() or (norm_b == 0).any():
        raise DegenerateNeuronError("zero-norm neuron row")
    return (a @ b.T) / np.outer(norm_a, norm_b)


def recover_permutation(
    cosine: np.ndarray, min_similarity: float = MIN_MATCH_SIMILARITY
) -> np.ndarray:
    """Bijection maximizing matched similarity; perm[i] = column matched to row i.

    Greedy row-argmax first; if two rows claim the same column, fall back to
    a global linear-sum assignment.  Raises RecoveryFailedError when the
    weakest matched similarity is not above ``min_similarity``.
    """
    cosine = np.asarray(cosine, dtype=np.float64)
    if cosine.ndim != 2 or cosine.shape[0] != cosine.shape[1]:
        raise FormatError(f"cosine matrix must be square, got {cosine.shape}")
    perm = np.argmax(cosine, axis=1)
    if np.unique(perm).size != perm.size:
        _, perm = linear_sum_assignment(cosine, maximize=True)
    matched = cosine[np.arange(perm.size), perm]
    weakest = float(matched.min())
    if weakest <= min_similarity:
        raise RecoveryFailedError(
            f"weakest neuron match has similarity {weakest:.3f} "
            f"(needs > {min_similarity})"
        )
    return perm.astype(np.int64)


def recover_permutation_map(
    shuffled: TensorContainer, baseline: TensorContainer
) -> PermutationMap:
    """Per-layer permutations aligning ``shuffled`` with the reference ordering.

    ``baseline`` is the model in its original neuron order (for a marked
    model, the owner's retained copy).  Layers are processed first to last:
    after layer i is matched, layer i+1's columns are de-permuted so its own
    rows become matchable.
    """
    ref_layers = dense_layers(baseline)
    shuf_layers = [(w.copy(), b.copy()) for w, b in dense_layers(shuffled)]
    if len(ref_layers) != len(shuf_layers) or any(
        rw.shape != sw.shape for (rw, _), (sw, _) in zip(ref_layers, shuf_layers)
    ):
        raise ShuffleError("models do not share an architecture")
    permutations = []
    for i in range(len(shuf_layers) - 1):
        ref_w = ref_layers[i][0]
        shuf_w = shuf_layers[i][0]
        try:
            perm = recover_permutation(cosine_matrix(ref_w, shuf_w))
        except RecoveryFailedError as exc:
            raise RecoveryFailedError(str(exc), layer=i) from exc
        permutations.append(perm)
        w_next, b_next = shuf_layers[i + 1]
        shuf_layers[i + 1] = (w_next[:, perm], b_next)
    return PermutationMap(per_layer=permutations)


def unshuffle_model(
    shuffled: TensorContainer, baseline: TensorContainer
) -> TensorContainer:
    """Undo a neuron shuffle so the result verifies against the baseline.

    Bit-exact inverse of the shuffle when the weights were not otherwise
    perturbed; on an unshuffled model the recovered permutations are the
    identity and the model comes back unchanged.
    """
    mapping = recover_permutation_map(shuffled, baseline)
    return apply_neuron_permutations(shuffled, mapping.per_layer)
