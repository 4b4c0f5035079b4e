"""Command-line entry point: simulate / analyze / packet / selfsim."""

from __future__ import annotations

import argparse
import sys

from . import io


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qdisp",
        description="Fifth-order mKdV-type simulator and asymptotics harness",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a simulation from a JSON config")
    sim.add_argument("config", help="path to the config JSON")
    sim.add_argument("--out", default="run", help="output run directory")

    ana = sub.add_parser("analyze", help="diagnostics, decay fits, bound ratios")
    ana.add_argument("rundir")
    ana.add_argument("--band-delta", type=float, default=0.25,
                     help="dyadic spacing exponent for the decomposition")
    ana.add_argument("--eps-reg", type=float, default=0.05,
                     help="region-threshold exponent parameter")
    ana.add_argument("--fit-tmin", type=float, default=10.0,
                     help="earliest time included in decay fits")

    pak = sub.add_parser("packet", help="wave-packet testing and W extraction")
    pak.add_argument("rundir")
    pak.add_argument("--vmin", type=float, default=None,
                     help="smallest |v| to test (default: derived from the run)")
    pak.add_argument("--vmax", type=float, default=None,
                     help="largest |v| to test")
    pak.add_argument("--nv", type=int, default=9, help="number of velocities")

    ss = sub.add_parser("selfsim", help="self-similar profile extraction")
    ss.add_argument("rundir")
    ss.add_argument("--ymax", type=float, default=8.0)
    ss.add_argument("--ny", type=int, default=513)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return io.cmd_simulate(args.config, args.out)
    if args.command == "analyze":
        return io.cmd_analyze(args.rundir, band_delta=args.band_delta,
                              eps_reg=args.eps_reg, fit_t_min=args.fit_tmin)
    if args.command == "packet":
        return io.cmd_packet(args.rundir, vmin=args.vmin, vmax=args.vmax,
                             nv=args.nv)
    if args.command == "selfsim":
        return io.cmd_selfsim(args.rundir, ymax=args.ymax, ny=args.ny)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
