"""Command-line front end: run sweeps, summarize results, and expose the
enumerative encoder/decoder for scripting."""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .runner import load_config, run
from .shaping import (
    AmplitudeAlphabet,
    build_trellis,
    calibrate_emax,
    constraints_from_rules,
    decode_sequence,
    encode_index,
)
from .summarize import SummaryError, summarize


def _add_shaping_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="blocklength in amplitudes")
    p.add_argument("--alphabet", default="1,3,5,7",
                   help="comma-separated odd amplitude levels")
    p.add_argument("--e-max", type=int, help="strict energy bound")
    p.add_argument("--target-rate", type=float, help="bits per amplitude (calibrates e_max)")
    p.add_argument("--k-max-ratio", type=float, help="k_max = ratio*e_max^2/n")
    p.add_argument("--band-slope", help="band center slope (fraction or decimal)")
    p.add_argument("--band-halfwidth", type=float,
                   help="band halfwidth in units of the max single-step energy")


def _trellis_from_args(args) -> object:
    alphabet = AmplitudeAlphabet(tuple(int(v) for v in args.alphabet.split(",")))
    slope = Fraction(args.band_slope) if args.band_slope else None
    if (args.e_max is None) == (args.target_rate is None):
        raise SystemExit("give exactly one of --e-max / --target-rate")
    if args.e_max is not None:
        cons = constraints_from_rules(alphabet, args.n, args.e_max,
                                      args.k_max_ratio, slope, args.band_halfwidth)
    else:
        cons = calibrate_emax(alphabet, args.n, args.target_rate,
                              args.k_max_ratio, slope, args.band_halfwidth)
    return build_trellis(alphabet, cons)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="shapelab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a sweep from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="output directory (defaults to the config's output_dir)")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--noiseless", action="store_true",
                       help="disable ASE for every run in the sweep")

    p_sum = sub.add_parser("summarize", help="write summary.json for a finished run")
    p_sum.add_argument("--in", dest="results_dir", required=True)

    p_enc = sub.add_parser("encode", help="hex index -> amplitude sequence")
    _add_shaping_args(p_enc)
    p_enc.add_argument("--index", required=True, help="hex index (big-endian bit-string)")

    p_dec = sub.add_parser("decode", help="amplitude sequence -> hex index")
    _add_shaping_args(p_dec)
    p_dec.add_argument("--amplitudes", required=True,
                       help="space-separated amplitudes, quoted")

    args = parser.parse_args(argv)

    if args.command == "run":
        config = load_config(args.config)
        out = args.out or config.output_dir
        if not out:
            raise SystemExit("no output directory: pass --out or set output_dir in the config")
        result = run(config, out, workers=args.workers, noiseless=args.noiseless)
        print(f"wrote results to {result['out_dir']} "
              f"({result['n_cells']} cells, {len(result['failures'])} failed)")
        if result["failures"]:
            for f in result["failures"]:
                print(f"  FAILED {f['scheme']} P={f['power_dbm']} dBm "
                      f"spans={f['n_spans']} seed={f['seed']}: {f['error']}", file=sys.stderr)
            return 1
        return 0

    if args.command == "summarize":
        try:
            verdict = summarize(args.results_dir)
        except SummaryError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for name, ok in sorted(verdict["checks"].items()):
            print(f"{'PASS' if ok else 'FAIL'} {name}")
        print(f"overall: {'PASS' if verdict['all_pass'] else 'FAIL'}")
        return 0 if verdict["all_pass"] else 1

    trellis = _trellis_from_args(args)
    if args.command == "encode":
        index = int(args.index, 16)
        seq = encode_index(trellis, index)
        print(" ".join(str(int(a)) for a in seq))
        return 0

    if args.command == "decode":
        seq = [int(a) for a in args.amplitudes.split()]
        rank = decode_sequence(trellis, seq)
        width = (trellis.input_bits + 3) // 4
        print(format(rank, f"0{max(width, 1)}x"))
        return 0

    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
