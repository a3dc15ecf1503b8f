"""Command-line front end for the full watermarking pipeline.

Thin shell over the library: every behavior here is reachable through the
in-process API.  ``--json`` emits a single JSON object on stdout; logs go to
stderr.  Exit codes: 0 success (and positive verification), 10 verification
negative, 2 usage, and distinct codes per error class below.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import attacks, keying, model_io, unshuffle, watermark
from . import errors as err

log = logging.getLogger("tattooed")

EXIT_OK = 0
EXIT_VERIFY_NEGATIVE = 10
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_KEY = 4
EXIT_CAPACITY = 5
EXIT_BASELINE = 6
EXIT_ATTACK = 7
EXIT_DOMAIN = 8
EXIT_UNEXPECTED = 1

_ERROR_EXITS = (
    (err.KeyFormatError, EXIT_KEY),
    (err.CapacityError, EXIT_CAPACITY),
    (err.BaselineMismatchError, EXIT_BASELINE),
    ((err.ShuffleError, err.RecoveryFailedError, err.DegenerateNeuronError), EXIT_ATTACK),
    ((err.FormatError, FileNotFoundError, IsADirectoryError), EXIT_FORMAT),
    (err.TattooedError, EXIT_DOMAIN),
)


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def _load_payload(path: str) -> watermark.WatermarkPayload:
    with open(path, "rb") as fh:
        return watermark.WatermarkPayload(fh.read())


def _parse_layers(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise err.FormatError(f"bad layer list {text!r}: {exc}") from exc


def cmd_keygen(args) -> int:
    if args.seed is not None:
        key = keying.SecretKey.from_passphrase_seed(args.seed)
    else:
        key = keying.SecretKey.generate()
    key.save(args.out, hex_encoding=args.hex)
    _emit({"key_file": args.out, "key_id": key.key_id()}, args.json)
    return EXIT_OK


def cmd_synth(args) -> int:
    container = model_io.synth_model(_parse_layers(args.layers), args.seed)
    model_io.save(container, args.out)
    _emit(
        {
            "model": args.out,
            "parameters": container.total_params,
            "tensors": len(container.manifest),
        },
        args.json,
    )
    return EXIT_OK


def cmd_mark(args) -> int:
    key = keying.SecretKey.load(args.key)
    container = model_io.load(args.model)
    weights = model_io.flatten(container)
    payload = _load_payload(args.payload_file)
    started = time.perf_counter()
    marked, record = watermark.mark(
        weights, key, payload,
        gamma=args.gamma, ratio=args.ratio, baseline_path=args.model,
    )
    elapsed = time.perf_counter() - started
    model_io.save(model_io.unflatten(marked, container), args.out)
    record.save(args.record)
    log.info("marked %s parameters in %.2fs", len(weights), elapsed)
    _emit(
        {
            "marked_model": args.out,
            "record": args.record,
            "payload_bits": payload.bit_length,
            "spread_bits": record.total_spread_bits,
            "selected_parameters": int(len(weights) * args.ratio),
            "elapsed_seconds": round(elapsed, 3),
        },
        args.json,
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    key = keying.SecretKey.load(args.key)
    record = watermark.MarkRecord.load(args.record)
    weights = model_io.flatten(model_io.load(args.model))
    baseline = model_io.flatten(model_io.load(args.baseline))
    started = time.perf_counter()
    report = watermark.verify(weights, record, key, baseline, threshold=args.threshold)
    elapsed = time.perf_counter() - started
    log.info("verification took %.2fs", elapsed)
    _emit(
        {
            "decision": report.decision,
            "watermark_accuracy": report.watermark_accuracy,
            "gain": report.estimate.gain,
            "sigma": report.estimate.sigma,
            "snr_db": report.estimate.snr_db,
            "extracted_payload_hex": report.extracted_payload.hex(),
            "elapsed_seconds": round(elapsed, 3),
        },
        args.json,
    )
    return EXIT_OK if report.decision == 1 else EXIT_VERIFY_NEGATIVE


def cmd_attack(args) -> int:
    spec = attacks.AttackSpec(
        kind=args.kind, intensity=args.intensity, attack_seed=args.seed
    )
    container = model_io.load(args.model)
    attacked = attacks.apply_attack(container, spec)
    model_io.save(attacked, args.out)
    _emit({"attacked_model": args.out, "kind": args.kind, "intensity": args.intensity}, args.json)
    return EXIT_OK


def cmd_unshuffle(args) -> int:
    shuffled = model_io.load(args.model)
    baseline = model_io.load(args.baseline)
    restored = unshuffle.unshuffle_model(shuffled, baseline)
    model_io.save(restored, args.out)
    _emit({"restored_model": args.out}, args.json)
    return EXIT_OK


def cmd_sweep_gamma(args) -> int:
    key = keying.SecretKey.load(args.key)
    weights = model_io.flatten(model_io.load(args.model))
    payload = _load_payload(args.payload_file)
    grid = [float(g) for g in args.grid.split(",")] if args.grid else None
    points = watermark.gamma_sweep(weights, key, payload, grid=grid, ratio=args.ratio)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        fh.write("gamma,watermark_accuracy,relative_distortion\n")
        for p in points:
            fh.write(f"{p.gamma},{p.accuracy},{p.distortion}\n")
    _emit({"sweep": args.out, "points": len(points)}, args.json)
    return EXIT_OK


def cmd_sweep_prune(args) -> int:
    key = keying.SecretKey.load(args.key)
    record = watermark.MarkRecord.load(args.record)
    marked = model_io.flatten(model_io.load(args.model))
    baseline = model_io.flatten(model_io.load(args.baseline))
    fractions = (
        [float(f) for f in args.fractions.split(",")]
        if args.fractions
        else attacks.DEFAULT_PRUNE_FRACTIONS
    )
    rows = attacks.run_pruning_sweep(
        marked, record, key, baseline, fractions=fractions, attack_seed=args.seed
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        attacks.write_pruning_csv(rows, fh)
    _emit({"sweep": args.out, "rows": len(rows)}, args.json)
    return EXIT_OK


def cmd_distcheck(args) -> int:
    from scipy import stats

    first = model_io.flatten(model_io.load(args.a)).values
    second = model_io.flatten(model_io.load(args.b)).values
    result = stats.ks_2samp(first, second, method="asymp")
    lo = min(first.min(), second.min())
    hi = max(first.max(), second.max())
    hist_a, _ = np.histogram(first, bins=256, range=(lo, hi), density=False)
    hist_b, _ = np.histogram(second, bins=256, range=(lo, hi), density=False)
    overlap = float(
        np.minimum(hist_a / first.size, hist_b / second.size).sum()
    )
    _emit(
        {
            "ks_statistic": float(result.statistic),
            "ks_pvalue": float(result.pvalue),
            "histogram_overlap": overlap,
            "mean_a": float(first.mean()),
            "mean_b": float(second.mean()),
            "std_a": float(first.std()),
            "std_b": float(second.std()),
        },
        args.json,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tattooed",
        description="Spread-spectrum watermarking for neural-network weights.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a 512-bit secret key file")
    p.add_argument("--out", required=True)
    p.add_argument("--hex", action="store_true", help="write hex instead of raw bytes")
    p.add_argument("--seed", help="derive the key from a passphrase (deterministic)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("synth", help="create a synthetic dense-network model")
    p.add_argument("--layers", required=True, help="comma-separated widths, e.g. 784,256,10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mark", help="embed a payload into a model")
    p.add_argument("--model", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--payload-file", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--ratio", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_mark)

    p = sub.add_parser("verify", help="check a model for the watermark")
    p.add_argument("--model", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--threshold", type=float, default=watermark.DECISION_THRESHOLD)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", help="apply a removal attack to a model")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", required=True, choices=attacks.AttackSpec.KINDS)
    p.add_argument("--intensity", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True,
                   help="attack randomness seed (required for reproducibility)")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("unshuffle", help="undo a neuron shuffling attack")
    p.add_argument("--model", required=True, help="shuffled model")
    p.add_argument("--baseline", required=True, help="model in original neuron order")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_unshuffle)

    p = sub.add_parser("sweep-gamma", help="accuracy/distortion across signal strengths")
    p.add_argument("--model", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--payload-file", required=True)
    p.add_argument("--ratio", type=float, default=1.0)
    p.add_argument("--grid", help="comma-separated strengths (default: 27-point grid)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sweep_gamma)

    p = sub.add_parser("sweep-prune", help="watermark survival across pruning fractions")
    p.add_argument("--model", required=True, help="marked model")
    p.add_argument("--record", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--fractions", help="comma-separated fractions (default: 8-row grid)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sweep_prune)

    p = sub.add_parser("distcheck", help="weight-distribution distance between two models")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_distcheck)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # map to stable exit codes
        for klass, code in _ERROR_EXITS:
            if isinstance(exc, klass):
                log.error("%s: %s", type(exc).__name__, exc)
                return code
        log.exception("unexpected failure")
        return EXIT_UNEXPECTED


def main() -> None:
    sys.exit(run())
