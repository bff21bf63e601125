"""Command line entry point: ``noisecomm <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 parse error, 4 domain
error, 5 no packet found.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import NoiseCommError
from .harness import output, runs
from .harness.scenario import Scenario, load_scenario
from .iq_ingest import IqFileHeader, hampel_filter, read_header, read_iq
from .modem import bits_to_hex, deframe, decide, detect_packet, integrate_and_dump

DEFAULT_PRESET = {
    "feedthrough": "feedthrough",
    "tempmod": "tempmod",
    "calibrate": "calibrate",
    "histogram": "histogram",
    "sweep": "sweep_distance",
    "demod-iq": "tempmod",
}


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario or DEFAULT_PRESET[args.command])
    return sc.with_overrides(seed=args.seed, trials=args.trials, outputs=args.out)


def _intensity_rows(soft, decided):
    return [(i, float(x), int(b)) for i, (x, b) in enumerate(zip(soft, decided))]


def cmd_feedthrough(args, sc: Scenario, out: Path) -> None:
    variants = [args.variant] if args.variant else list(runs.FEEDTHROUGH_VARIANTS)
    for v in variants:
        res = runs.run_feedthrough(v, sc)
        output.write_json(out / f"feedthrough_{v}.json", {**runs.provenance(sc), **res.summary()})
        centers = 0.5 * (res.hist_edges[:-1] + res.hist_edges[1:])
        output.write_csv(out / f"feedthrough_{v}_hist.csv", ["bin_center", "density_0", "density_1"],
                         zip(centers, res.hist_zero, res.hist_one))
        print(f"{v}: ber={res.ber:.4f} ks_p={res.ks_pvalue:.3g} separable={res.separable}")


def cmd_tempmod(args, sc: Scenario, out: Path) -> None:
    res = runs.run_temperature_modulation(sc)
    output.write_json(out / "tempmod.json", {**runs.provenance(sc), **res.summary()})
    output.write_csv(out / "tempmod_bits.csv", ["bit_index", "intensity", "decision", "truth"],
                     ((i, float(x), int(b), int(t)) for i, (x, b, t) in
                      enumerate(zip(res.soft_intensities, res.decided_bits, res.true_bits))))
    centers = 0.5 * (res.hist_edges[:-1] + res.hist_edges[1:])
    output.write_csv(out / "tempmod_hist.csv", ["bin_center", "density_0", "density_1"],
                     zip(centers, res.hist_zero, res.hist_one))
    print(f"tempmod: ber={res.ber:.4f} over {res.n_bits} bits")


def cmd_calibrate(args, sc: Scenario, out: Path) -> None:
    res = runs.run_calibration(sc)
    output.write_json(out / "calibration_fit.json", {**runs.provenance(sc), **res.summary()})
    table = runs.table1_comparison(sc.chain, res.fit)
    cols = list(table[0])
    output.write_csv(out / "calibration_table.csv", cols, ([r[c] for c in cols] for r in table))
    print(f"fit: slope={res.fit.slope:.6g} intercept={res.fit.intercept:.6g}")
    for p in res.probes:
        print(f"  {p['load']}: T_N={p['noise_temp']:.1f} K")
    print(f"note: {res.note}")


def cmd_histogram(args, sc: Scenario, out: Path) -> None:
    res = runs.run_histogram(sc)
    output.write_csv(out / "histogram.csv", ["bin_center", "empirical_density", "theory_density", "sigma_sq"],
                     ((c, e, t, res.sigma_sq) for c, e, t in
                      zip(res.bin_centers, res.empirical_density, res.theory_density)))
    output.write_json(out / "histogram.json", {**runs.provenance(sc), "sigma_sq": res.sigma_sq, "n": res.n,
                                               "gof_statistic": res.gof_statistic, "gof_pvalue": res.gof_pvalue})
    print(f"histogram: sigma_sq={res.sigma_sq:.5g} gof_p={res.gof_pvalue:.3g}")


def cmd_sweep(args, sc: Scenario, out: Path) -> None:
    axis = args.axis or sc.param("axis", "distance")
    res = runs.run_ber_sweep(axis, sc)
    fields = ["rate", "distance", "rx_contrast", "ber", "ci_low", "ci_high", "bit_errors", "n_bits",
              "analytic_ber", "packets_attempted", "packets_decoded"]
    output.write_csv(out / f"sweep_{axis}.csv", fields, ([getattr(p, f) for f in fields] for p in res.points))
    output.write_json(out / f"sweep_{axis}.json", {**runs.provenance(sc), "axis": axis, "ci_method": res.ci_method,
                                                   "tx_contrast": res.tx_contrast, "throughput": res.throughput})
    for p in res.points:
        print(f"rate={p.rate:g}bps d={p.distance:g}m ber={p.ber:.4f} [{p.ci_low:.4f},{p.ci_high:.4f}]")
    for d, r in res.throughput.items():
        print(f"throughput at {d:g} m: {r} bps")


def cmd_demod_iq(args, sc: Scenario, out: Path) -> None:
    if args.format:
        header = IqFileHeader(args.format, args.rate or sc.modem.sample_rate_hz, args.center or 1.42e9,
                              args.scale if args.scale is not None else 1.0)
    else:
        header = read_header(args.input)
    stream = read_iq(args.input, header)
    samples = stream.samples
    if args.hampel:
        samples = hampel_filter(samples, k=args.hampel)
    cfg = sc.modem
    if header.sample_rate_hz != cfg.sample_rate_hz:
        cfg = replace(cfg, sample_rate_hz=header.sample_rate_hz)
    soft = integrate_and_dump(samples, cfg, sync_offset=args.sync_offset)
    al = detect_packet(soft, cfg)
    decided = decide(soft, al.threshold)
    output.write_csv(out / "demod_intensities.csv", ["bit_index", "intensity", "decision"],
                     _intensity_rows(soft, decided))
    payload = deframe(decided[al.offset:], cfg)
    output.write_json(out / "demod_packet.json", {"offset": al.offset, "threshold": al.threshold,
                                                  "score": al.score, "payload_bits": payload.tolist(),
                                                  "payload_hex": bits_to_hex(payload)})
    print(f"packet at bit {al.offset}: {''.join(map(str, payload))} (0x{bits_to_hex(payload)})")


COMMANDS = {
    "feedthrough": cmd_feedthrough,
    "tempmod": cmd_tempmod,
    "calibrate": cmd_calibrate,
    "histogram": cmd_histogram,
    "sweep": cmd_sweep,
    "demod-iq": cmd_demod_iq,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file or preset name")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory (default: scenario outputs)")
    common.add_argument("--trials", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="noisecomm", description="Modulated Johnson noise simulator")
    sub = p.add_subparsers(dest="command", required=True)
    f = sub.add_parser("feedthrough", parents=[common], help="feedthrough control experiments")
    f.add_argument("--variant", choices=list(runs.FEEDTHROUGH_VARIANTS))
    sub.add_parser("tempmod", parents=[common], help="296 K vs 77 K temperature modulation")
    sub.add_parser("calibrate", parents=[common], help="noise-temperature calibration")
    sub.add_parser("histogram", parents=[common], help="sample histogram with Gaussian overlay")
    s = sub.add_parser("sweep", parents=[common], help="BER sweep over distance or rate")
    s.add_argument("--axis", choices=["distance", "rate"])
    d = sub.add_parser("demod-iq", parents=[common], help="demodulate a recorded IQ capture")
    d.add_argument("input")
    d.add_argument("--format", choices=["cf32_interleaved", "i16_interleaved", "csv"])
    d.add_argument("--rate", type=float, help="sample rate (Hz)")
    d.add_argument("--center", type=float, help="center frequency (Hz)")
    d.add_argument("--scale", type=float)
    d.add_argument("--sync-offset", type=int, default=0)
    d.add_argument("--hampel", type=int, metavar="K", help="Hampel-filter the samples with K neighbours")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        sc = _scenario(args)
        out = Path(sc.outputs)
        COMMANDS[args.command](args, sc, out)
    except NoiseCommError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
