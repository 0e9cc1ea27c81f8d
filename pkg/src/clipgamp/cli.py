"""Command-line entry point: ``sim --config run.cfg [overrides]``."""

import argparse
import os
import sys

from . import harness


def build_parser():
    p = argparse.ArgumentParser(prog="sim", description="Monte-Carlo BER sweep for clipped DMT receivers.")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--receiver", help="comma list from: " + ", ".join(harness.RECEIVERS))
    p.add_argument("--ebno", help="Eb/N0 grid, start:step:stop or comma list (dB)")
    p.add_argument("--mod", help="4qam or 16qam")
    p.add_argument("--clip", help="clipping threshold T, or 'none'")
    p.add_argument("--channel", choices=("awgn", "multipath"))
    p.add_argument("--blocks-max", type=int, dest="max_blocks")
    p.add_argument("--min-errors", type=int, dest="min_bit_errors")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="ber.csv", help="output CSV path (default ber.csv)")
    p.add_argument("--meta", help="metadata JSON path (default: <out>.meta.json)")
    p.add_argument("--variance-mode", choices=("scalar", "exact"))
    p.add_argument("--energy", choices=("transmitted", "preclip"), dest="energy_convention")
    p.add_argument("--workers", type=int)
    p.add_argument("--skip-calibration", action="store_true",
                   help="do not run the ideal-linear self-check first")
    p.add_argument("--quiet", action="store_true")
    return p


def _overrides(args):
    out = {}
    if args.receiver is not None:
        out["receivers"] = harness._coerce("receivers", args.receiver)
    if args.ebno is not None:
        out["ebno"] = harness.parse_grid(args.ebno)
    if args.mod is not None:
        out["M"] = harness.parse_modulation(args.mod)
    if args.clip is not None:
        try:
            out["clip"] = harness._coerce("clip", args.clip)
        except ValueError as exc:
            raise harness.ConfigError(f"bad clip threshold {args.clip!r}") from exc
    for key in ("channel", "max_blocks", "min_bit_errors", "seed", "variance_mode",
                "energy_convention", "workers"):
        value = getattr(args, key)
        if value is not None:
            out[key] = value
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = _overrides(args)
        if args.config:
            config = harness.load_config(args.config, **overrides)
        else:
            config = harness.SimConfig(**overrides)
    except harness.ConfigError as exc:
        print(f"sim: config error: {exc}", file=sys.stderr)
        return 2

    say = (lambda *a: None) if args.quiet else (lambda *a: print(*a, file=sys.stderr))
    calibration = None
    if not args.skip_calibration:
        calibration = harness.calibrate(config)
        for pt in calibration["points"]:
            say(f"calibration Eb/N0={pt['ebno_db']:g} dB ber={pt['ber']:.3e} "
                f"theory={pt['theory']:.3e} z={pt['z']:+.2f}")
        if not calibration["passed"]:
            print("sim: ideal-linear calibration failed", file=sys.stderr)
            return 3

    def progress(rec):
        it = "" if rec.avg_iterations is None else f" iters={rec.avg_iterations:.2f}"
        say(f"{rec.receiver:>24s} Eb/N0={rec.ebno_db:5.2f} ber={rec.ber:.3e} "
            f"errors={rec.bit_errors} blocks={rec.blocks}{it}")

    records = harness.run_sweep(config, progress)
    try:
        harness.write_csv(records, args.out)
        harness.write_meta(config, args.meta or os.path.splitext(args.out)[0] + ".meta.json",
                           records, calibration)
    except OSError as exc:
        print(f"sim: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
