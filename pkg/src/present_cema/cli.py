"""Command-line interface: ``present-cema <command> ...``.

Exit status: 0 success, 1 usage error, 2 data/format error, 3 attack finished
without confident recovery of all eight bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import nullcontext

import numpy as np

from . import __version__
from .bfa import PartialKey, complete_key
from .cema import CEMAttack, attack_key, parse_pattern, success_rate
from .dsp import BandSpec, band_filter, mean_spectrum, spectrogram
from .exceptions import ConfigurationError, DataError
from .present import (decrypt, encrypt, format_block, format_key, parse_block,
                      parse_key)
from .sema import compare_sets
from .synth import (REFERENCE_INTERFERERS_HZ, RNG_ALGORITHM, SynthConfig, reference_interferers,
                    synthesize_idle_set, synthesize_set)
from .traceio import read_trace_set, write_trace_set

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UNCONFIDENT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _typed(fn):
    def convert(text):
        try:
            return fn(text)
        except (ConfigurationError, ValueError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    convert.__name__ = fn.__name__
    return convert


key_arg = _typed(parse_key)
block_arg = _typed(parse_block)


@_typed
def u64_arg(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise ValueError(f"{text} is not an unsigned 64-bit integer")
    return value


@_typed
def bands_arg(text):
    return [BandSpec.parse(part) for part in text.split(",") if part]


@_typed
def centers_arg(text):
    if text == "reference":
        return list(REFERENCE_INTERFERERS_HZ)
    return [float(x) for x in text.split(",") if x]


@_typed
def frame_arg(text):
    w, o = (int(x) for x in text.split(":"))
    return w, o


def _interferers(spec: str, amplitude: float):
    if spec in ("", "none"):
        return ()
    if spec == "reference":
        return reference_interferers(amplitude)
    out = []
    for part in spec.split(","):
        f, _, a = part.partition(":")
        out.append((float(f), float(a) if a else amplitude))
    return tuple(out)


def _add_synth_options(p):
    p.add_argument("--seed", type=u64_arg, default=0)
    p.add_argument("--noise", type=float, default=1.0, help="noise standard deviation (V)")
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--baseline", type=float, default=5.0)
    p.add_argument("--activity-gain", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--sample-rate", type=float, default=2.5e9, help="Hz")
    p.add_argument("--interferers", default="none",
                   help="'none', 'reference' (11.25 ... 112.66 MHz) or a list F[:A],F[:A] in Hz")
    p.add_argument("--interferer-amplitude", type=float, default=0.5)


def _add_band_options(p):
    p.add_argument("--filter", type=bands_arg, default=[], metavar="LO:HI[,...]",
                   help="keep only these bands (Hz) before correlating")
    p.add_argument("--notch", type=bands_arg, default=[], metavar="LO:HI[,...]",
                   help="remove these bands (Hz)")
    p.add_argument("--notch-at", type=centers_arg, default=[], metavar="F[,...]|reference",
                   help="remove +/- --half-width around each frequency")
    p.add_argument("--half-width", type=float, default=1e6, help="Hz, default 1 MHz")


def _bands(args) -> list[BandSpec]:
    bands = list(args.filter)
    bands += [BandSpec(b.low_hz, b.high_hz, "notch") for b in args.notch]
    bands += [BandSpec.around(f, args.half_width, "notch") for f in args.notch_at]
    return bands


def _config(args) -> SynthConfig:
    return SynthConfig(gain=args.gain, noise_sigma=args.noise, baseline=args.baseline,
                       activity_gain=args.activity_gain, sample_rate_hz=args.sample_rate,
                       samples_per_trace=args.samples,
                       interferers=_interferers(args.interferers, args.interferer_amplitude),
                       seed=args.seed)


def _emit_json(obj, out):
    json.dump(obj, out, indent=2)
    out.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="present-cema", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=None,
                        help="cap on BLAS threads (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="synthesize an EMTS trace set")
    p.add_argument("--traces", type=int, required=True)
    p.add_argument("--key", type=key_arg)
    p.add_argument("--out", required=True)
    p.add_argument("--idle", action="store_true", help="device idle: no encryption, no leakage")
    _add_synth_options(p)

    p = sub.add_parser("attack", help="recover key bytes 1..8 from an EMTS file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--top", type=int, default=5)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    p.add_argument("--surface-byte", type=int, help="export this byte's correlation surface")
    p.add_argument("--surface-csv", help="path for the exported surface (candidate,sample,rho)")
    _add_band_options(p)

    p = sub.add_parser("sema", help="RMS/peak comparison of active vs idle sets")
    p.add_argument("--active", required=True)
    p.add_argument("--idle", required=True)
    p.add_argument("--csv", action="store_true", help="per-trace RMS as CSV")

    p = sub.add_parser("semfa", help="mean magnitude spectrum / spectrogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--idle", help="optional idle set for a difference spectrum")
    p.add_argument("--peaks", type=int, default=10)
    p.add_argument("--min-hz", type=float, default=1e6)
    p.add_argument("--csv", action="store_true", help="full spectrum as bin_hz,magnitude")
    p.add_argument("--full", action="store_true", help="include every bin in the JSON")
    p.add_argument("--spectrogram", type=frame_arg, metavar="WINDOW:OVERLAP")
    p.add_argument("--trace", type=int, default=0, help="trace used for --spectrogram")

    p = sub.add_parser("filter", help="FFT band filtering of an EMTS file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--taper", type=float, default=0.0, help="raised-cosine edge width (Hz)")
    _add_band_options(p)

    p = sub.add_parser("sr", help="success rate over seeded synthetic attacks")
    p.add_argument("--pattern", required=True, help="00, 55, aa, ff or 01010101b ...")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--traces", type=int, default=256)
    p.add_argument("--csv", action="store_true")
    _add_synth_options(p)
    _add_band_options(p)

    p = sub.add_parser("bfa", help="brute-force key bytes 9 and 10")
    p.add_argument("--partial", help="key bytes 1..8 as 16 hex characters")
    p.add_argument("--pt", type=block_arg)
    p.add_argument("--ct", type=block_arg)
    p.add_argument("--verify-pt", type=block_arg)
    p.add_argument("--verify-ct", type=block_arg)
    p.add_argument("--in", dest="input", help="EMTS file: attack it for the partial key and "
                   "take known pairs from its first traces")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("encrypt", help="PRESENT-80 encryption of one block")
    p.add_argument("--key", type=key_arg, required=True)
    p.add_argument("--pt", type=block_arg, required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("decrypt", help="PRESENT-80 decryption of one block")
    p.add_argument("--key", type=key_arg, required=True)
    p.add_argument("--ct", type=block_arg, required=True)
    p.add_argument("--json", action="store_true")
    return parser


def cmd_gen(args, out):
    cfg = _config(args)
    if args.traces < 1:
        raise UsageError("--traces must be >= 1")
    if args.idle:
        ts = synthesize_idle_set(args.traces, cfg)
    else:
        if args.key is None:
            raise UsageError("--key is required unless --idle is given")
        ts = synthesize_set(args.traces, args.key, cfg)
    nbytes = write_trace_set(ts, args.out)
    _emit_json({"out": args.out, "bytes": nbytes, "traces": len(ts), "idle": args.idle,
                "key": None if ts.key is None else format_key(ts.key),
                "seed": args.seed, "rng": RNG_ALGORITHM, "config": cfg.to_dict()}, out)
    return EXIT_OK


def cmd_attack(args, out):
    ts = read_trace_set(args.input)
    report = attack_key(ts, _bands(args))
    if args.surface_byte is not None:
        if not args.surface_csv:
            raise UsageError("--surface-byte needs --surface-csv")
        est = CEMAttack(_bands(args), ts.sample_rate_hz, byte_indices=(args.surface_byte,),
                        keep_surfaces=True).fit(ts.samples, ts.plaintexts)
        with open(args.surface_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["candidate", "sample", "rho"])
            w.writerows(est.surfaces_[args.surface_byte].to_rows())
    if args.csv:
        w = csv.writer(out)
        w.writerow(["byte_index", "rank", "candidate", "peak_rho", "sample_index", "confident"])
        for b in report.bytes:
            for rank, r in enumerate(b.ranking[:args.top], 1):
                w.writerow([b.byte_index, rank, f"{r.value:02X}", r.peak, r.sample_index,
                            b.confident])
    else:
        _emit_json(report.to_dict(args.top), out)
    return EXIT_OK if report.all_confident else EXIT_UNCONFIDENT


def cmd_sema(args, out):
    report = compare_sets(read_trace_set(args.active), read_trace_set(args.idle))
    if args.csv:
        w = csv.writer(out)
        w.writerow(["set", "trace", "rms"])
        for name, vec in (("active", report.per_trace_rms_active), ("idle", report.per_trace_rms_idle)):
            w.writerows((name, i, v) for i, v in enumerate(vec.tolist()))
    else:
        _emit_json(report.to_dict(), out)
    return EXIT_OK


def cmd_semfa(args, out):
    ts = read_trace_set(args.input)
    if args.spectrogram:
        window, overlap = args.spectrogram
        if not 0 <= args.trace < len(ts):
            raise UsageError(f"--trace must be in 0..{len(ts) - 1}")
        mags = spectrogram(ts[args.trace], window, overlap)
        hop = window - overlap
        times = ((np.arange(mags.shape[0]) * hop + window / 2) / ts.sample_rate_hz).tolist()
        freqs = np.fft.rfftfreq(window, 1 / ts.sample_rate_hz).tolist()
        if args.csv:
            w = csv.writer(out)
            w.writerow(["time_s", "bin_hz", "magnitude"])
            for t, row in zip(times, mags.tolist()):
                w.writerows((t, f, m) for f, m in zip(freqs, row))
        else:
            _emit_json({"window_len": window, "overlap": overlap, "times_s": times,
                        "frequencies_hz": freqs, "magnitudes": mags.tolist()}, out)
        return EXIT_OK
    spec = mean_spectrum(ts)
    result = {"traces": len(ts), "bin_resolution_hz": spec.bin_resolution_hz,
              "peaks": [{"hz": f, "magnitude": m} for f, m in spec.peaks(args.peaks, args.min_hz)]}
    if args.idle:
        idle = mean_spectrum(read_trace_set(args.idle))
        if idle.bin_magnitudes.shape != spec.bin_magnitudes.shape:
            raise DataError("active and idle sets have different trace lengths")
        diff = type(spec)(np.abs(spec.bin_magnitudes - idle.bin_magnitudes), spec.bin_resolution_hz)
        result["difference_peaks"] = [{"hz": f, "magnitude": m}
                                      for f, m in diff.peaks(args.peaks, args.min_hz)]
    if args.csv:
        w = csv.writer(out)
        w.writerow(["bin_hz", "magnitude"])
        w.writerows(spec.to_rows())
        return EXIT_OK
    if args.full:
        result["bins"] = [{"bin_hz": f, "magnitude": m} for f, m in spec.to_rows()]
    _emit_json(result, out)
    return EXIT_OK


def cmd_filter(args, out):
    bands = _bands(args)
    if not bands:
        raise UsageError("give at least one of --filter, --notch, --notch-at")
    ts = read_trace_set(args.input)
    filtered = band_filter(ts, bands, args.taper)
    nbytes = write_trace_set(filtered, args.out)
    _emit_json({"out": args.out, "bytes": nbytes, "traces": len(filtered),
                "bands": [{"low_hz": b.low_hz, "high_hz": b.high_hz, "mode": b.mode} for b in bands]},
               out)
    return EXIT_OK


def cmd_sr(args, out):
    try:
        parse_pattern(args.pattern)
    except ConfigurationError as exc:
        raise UsageError(f"--pattern: {exc}") from None
    if args.runs < 1 or args.traces < 2:
        raise UsageError("--runs must be >= 1 and --traces >= 2")
    report = success_rate(args.pattern, args.runs, args.traces, _config(args), _bands(args))
    if args.csv:
        w = csv.writer(out)
        w.writerow(["byte_index", "successes", "runs", "success_rate"])
        w.writerows((i + 1, s, report.runs, r)
                    for i, (s, r) in enumerate(zip(report.successes.tolist(),
                                                   report.success_rate.tolist())))
    else:
        _emit_json(report.to_dict(), out)
    return EXIT_OK


def cmd_bfa(args, out):
    pt, ct = args.pt, args.ct
    verify = None
    if args.verify_pt is not None or args.verify_ct is not None:
        if args.verify_pt is None or args.verify_ct is None:
            raise UsageError("--verify-pt and --verify-ct go together")
        verify = (args.verify_pt, args.verify_ct)
    attack = None
    if args.input:
        ts = read_trace_set(args.input)
        if ts.ciphertexts is None:
            raise DataError(f"{args.input} stores no ciphertexts")
        if pt is None:
            pt, ct = ts[0].plaintext, ts[0].ciphertext
            if verify is None and len(ts) > 1:
                verify = (ts[1].plaintext, ts[1].ciphertext)
        if args.partial is None:
            attack = attack_key(ts)
    if pt is None or ct is None:
        raise UsageError("need --pt and --ct, or --in with ciphertexts")
    if args.partial is not None:
        try:
            partial = PartialKey(parse_block(args.partial))
        except ConfigurationError as exc:
            raise UsageError(f"--partial: {exc}") from None
    elif attack is not None:
        partial = PartialKey.from_bytes(attack.recovered_bytes)
    else:
        raise UsageError("need --partial or --in")
    result = complete_key(partial, pt, ct, verify, workers=args.workers)
    _emit_json({"partial": format_block(partial.known), "found": result.found,
                "key": None if result.key is None else format_key(result.key),
                "matches": [format_key(k) for k in result.matches], "trials": result.trials,
                "ambiguous": result.ambiguous}, out)
    return EXIT_OK if result.found else EXIT_UNCONFIDENT


def cmd_encrypt(args, out):
    ct = format_block(encrypt(args.pt, args.key))
    if args.json:
        _emit_json({"key": format_key(args.key), "plaintext": format_block(args.pt),
                    "ciphertext": ct}, out)
    else:
        out.write(ct + "\n")
    return EXIT_OK


def cmd_decrypt(args, out):
    pt = format_block(decrypt(args.ct, args.key))
    if args.json:
        _emit_json({"key": format_key(args.key), "ciphertext": format_block(args.ct),
                    "plaintext": pt}, out)
    else:
        out.write(pt + "\n")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "attack": cmd_attack, "sema": cmd_sema, "semfa": cmd_semfa,
            "filter": cmd_filter, "sr": cmd_sr, "bfa": cmd_bfa, "encrypt": cmd_encrypt,
            "decrypt": cmd_decrypt}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    limit = nullcontext()
    if args.threads:
        from threadpoolctl import threadpool_limits
        limit = threadpool_limits(args.threads)
    try:
        with limit:
            return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"present-cema {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"present-cema {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"present-cema {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
