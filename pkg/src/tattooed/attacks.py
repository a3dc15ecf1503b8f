"""Watermark-removal attack harness: pruning, additive perturbation, and
neuron shuffling.

Pruning zeroes weights in place across the whole vector (an attacker does
not know the selection).  Gaussian perturbation is a training-free stand-in
for fine-tuning weight drift; it exercises the same SNR-degradation pathway
without a gradient loop.  Shuffling permutes hidden neurons, preserving the
network function while scrambling parameter positions.

Every attack is a pure function of (input, parameters, seed).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from . import keying, watermark
from .errors import FormatError, ShuffleError
from .model_io import (
    ParameterVector,
    TensorContainer,
    container_from_layers,
    dense_layers,
)

DEFAULT_PRUNE_FRACTIONS = (0.25, 0.50, 0.75, 0.90, 0.95, 0.99, 0.9975, 0.9999)
SWEEP_CSV_HEADER = ("fraction", "watermark_accuracy", "snr_db")


class PruneStrategy(str, enum.Enum):
    RANDOM = "random"
    MAGNITUDE = "magnitude"


@dataclass(frozen=True)
class AttackSpec:
    """kind: prune_random | prune_magnitude | perturb_gaussian | shuffle."""

    kind: str
    intensity: float
    attack_seed: int | bytes

    KINDS = ("prune_random", "prune_magnitude", "perturb_gaussian", "shuffle")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.kind.startswith("prune") and not 0.0 <= self.intensity <= 1.0:
            raise ValueError("pruning fraction must be in [0, 1]")
        if self.kind == "perturb_gaussian" and self.intensity < 0.0:
            raise ValueError("noise standard deviation must be >= 0")


def _values_of(weights) -> np.ndarray:
    if isinstance(weights, ParameterVector):
        return weights.values
    return np.asarray(weights, dtype=np.float64)


def _wrap_like(original, values: np.ndarray):
    if isinstance(original, ParameterVector):
        return ParameterVector.from_values(values)
    return values


def prune(
    weights,
    fraction: float,
    strategy: PruneStrategy = PruneStrategy.RANDOM,
    attack_seed: int | bytes = 0,
):
    """Zero exactly floor(fraction * N) weights.

    Random strategy picks positions uniformly from the seed; magnitude
    strategy zeroes the smallest |w| entries, breaking ties by index order.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"pruning fraction {fraction} outside [0, 1]")
    values = _values_of(weights).copy()
    count = int(fraction * values.size)
    if count == 0:
        return _wrap_like(weights, values)
    strategy = PruneStrategy(strategy)
    if strategy is PruneStrategy.RANDOM:
        rng = keying.seeded_generator("attack:prune", attack_seed)
        victims = rng.permutation(values.size)[:count]
    else:
        victims = np.argsort(np.abs(values), kind="stable")[:count]
    values[victims] = 0.0
    return _wrap_like(weights, values)


def perturb(weights, sigma_w: float, attack_seed: int | bytes = 0):
    """Add seeded i.i.d. N(0, sigma_w^2) noise to every weight."""
    if sigma_w < 0.0:
        raise ValueError("noise standard deviation must be >= 0")
    values = _values_of(weights).copy()
    if sigma_w > 0.0:
        rng = keying.seeded_generator("attack:perturb", attack_seed)
        values += rng.normal(0.0, sigma_w, size=values.size)
    return _wrap_like(weights, values)


def draw_neuron_permutations(
    container: TensorContainer, attack_seed: int | bytes
) -> list[np.ndarray]:
    """One random permutation per hidden layer (output layer stays fixed)."""
    try:
        layers = dense_layers(container)
    except FormatError as exc:
        raise ShuffleError(str(exc)) from exc
    rng = keying.seeded_generator("attack:shuffle", attack_seed)
    return [rng.permutation(w.shape[0]) for w, _ in layers[:-1]]


def apply_neuron_permutations(
    container: TensorContainer, permutations: list[np.ndarray]
) -> TensorContainer:
    """Reorder hidden neurons: permutation[j] names the old row placed at j.

    Rows of layer i and the matching bias entries move together, and the
    columns of layer i+1 follow, so the composed network function is
    unchanged.
    """
    try:
        layers = [(w.copy(), b.copy()) for w, b in dense_layers(container)]
    except FormatError as exc:
        raise ShuffleError(str(exc)) from exc
    if len(permutations) != len(layers) - 1:
        raise ShuffleError(
            f"{len(permutations)} permutations for {len(layers) - 1} hidden layers"
        )
    for i, perm in enumerate(permutations):
        perm = np.asarray(perm, dtype=np.int64)
        w, b = layers[i]
        if perm.shape != (w.shape[0],) or not np.array_equal(
            np.sort(perm), np.arange(w.shape[0])
        ):
            raise ShuffleError(f"layer {i} permutation is not a bijection")
        layers[i] = (w[perm], b[perm])
        w_next, b_next = layers[i + 1]
        layers[i + 1] = (w_next[:, perm], b_next)
    return container_from_layers(layers, container)


def shuffle_model(model: TensorContainer, attack_seed: int | bytes) -> TensorContainer:
    """Randomly permute every hidden layer's neurons, function-preserving."""
    return apply_neuron_permutations(
        model, draw_neuron_permutations(model, attack_seed)
    )


@dataclass(frozen=True)
class PruneSweepRow:
    fraction: float
    watermark_accuracy: float
    snr_db: float


def run_pruning_sweep(
    marked,
    record: watermark.MarkRecord,
    key: keying.SecretKey,
    baseline,
    fractions=DEFAULT_PRUNE_FRACTIONS,
    strategy: PruneStrategy = PruneStrategy.RANDOM,
    attack_seed: int | bytes = 0,
) -> list[PruneSweepRow]:
    """Prune a fresh copy at each fraction and verify; one row per fraction."""
    rows = []
    for fraction in fractions:
        attacked = prune(marked, fraction, strategy=strategy, attack_seed=attack_seed)
        report = watermark.verify(attacked, record, key, baseline)
        rows.append(
            PruneSweepRow(
                fraction=float(fraction),
                watermark_accuracy=report.watermark_accuracy,
                snr_db=report.estimate.snr_db,
            )
        )
    return rows


def write_pruning_csv(rows: list[PruneSweepRow], fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(SWEEP_CSV_HEADER)
    for row in rows:
        writer.writerow([row.fraction, row.watermark_accuracy, row.snr_db])


def apply_attack(container: TensorContainer, spec: AttackSpec) -> TensorContainer:
    """Run one attack on a tensor container (flattening for vector attacks)."""
    from .model_io import flatten, unflatten

    if spec.kind == "shuffle":
        return shuffle_model(container, spec.attack_seed)
    vector = flatten(container)
    if spec.kind == "prune_random":
        out = prune(vector, spec.intensity, PruneStrategy.RANDOM, spec.attack_seed)
    elif spec.kind == "prune_magnitude":
        out = prune(vector, spec.intensity, PruneStrategy.MAGNITUDE, spec.attack_seed)
    else:
        out = perturb(vector, spec.intensity, spec.attack_seed)
    return unflatten(out, container)
