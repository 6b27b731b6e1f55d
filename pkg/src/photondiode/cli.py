"""Command-line front end.

Subcommands map one-to-one onto the toolkit's data products:

  waveform   drive voltage, Stark-shifted line energy and collection gate
  hbt        intensity-autocorrelation run + peak analysis (g2(0))
  hom        two-photon-interference run + peak analysis (visibility)
  dip        analytic central-area scan vs period mismatch
  dip-mc     Monte Carlo central-area scan vs period mismatch
  fit        fit (tau_c, sigma) to a measured dip CSV
  relations  closed-form scalar relations for given T1, T2, g2(0)
  emit-plot-data   normalize any result file to a flat x,y[,yerr] CSV

Every run writes a manifest.json (config hash, seed, tool version) next to
its outputs; reruns with identical inputs are byte-identical.  Exit codes:
0 success, 1 validation/configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import Mode, QuadratureError, dephasing_time, dip_curve, \
    entanglement_criterion, fixed_bias_visibility
from .analysis import correct_dark_counts, g2_zero, peak_areas, visibility_from_areas
from .config import RunConfig, load_config
from .core import ValidationError, stark_energy
from .fit import fit_dip
from .montecarlo import InterferometerSim, simulate_hbt, simulate_hom


def _out_dir(args) -> Path:
    d = args.out_dir or os.environ.get("PHOTONDIODE_OUT_DIR") or "."
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out: Path, subcommand: str, cfg_payload, seed, cycles, outputs):
    digest = hashlib.sha256(
        json.dumps(cfg_payload, sort_keys=True).encode()).hexdigest()
    manifest = {
        "subcommand": subcommand,
        "config_hash": digest,
        "seed": seed,
        "cycles": cycles,
        "tool_version": __version__,
        "outputs": sorted(outputs),
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    from dataclasses import replace
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "cycles", None) is not None:
        cfg = replace(cfg, cycles=args.cycles)
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, workers=args.workers)
    if getattr(args, "orthogonal", False):
        cfg = replace(cfg, interferometer=InterferometerSim(
            delay=cfg.interferometer.delay,
            split_a=cfg.interferometer.split_a,
            split_b=cfg.interferometer.split_b,
            mode=Mode.ORTHOGONAL,
        ))
    return cfg


def _deltas(args) -> np.ndarray:
    if args.delta_step <= 0:
        raise ValidationError("--delta-step must be positive")
    n = int(round((args.delta_max - args.delta_min) / args.delta_step))
    return args.delta_min + args.delta_step * np.arange(n + 1)


def _cmd_waveform(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    t = np.linspace(0.0, cfg.waveform.period, args.samples)
    v = cfg.waveform.voltage_at(t)
    e = stark_energy(v, cfg.emitter)
    with open(out / "waveform.csv", "w") as f:
        f.write("time_ps,voltage_v,energy_ev\n")
        for ti, vi, ei in zip(t, v, e):
            f.write(f"{ti:.12g},{vi:.12g},{ei:.12g}\n")
    with open(out / "gate.json", "w") as f:
        json.dump({"t_on": cfg.gate.t_on, "t_off": cfg.gate.t_off,
                   "duration": cfg.gate.duration}, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out, "waveform", cfg.raw, None, None,
                    ["waveform.csv", "gate.json"])
    print(f"gate: [{cfg.gate.t_on}, {cfg.gate.t_off}] ps "
          f"({cfg.gate.duration} ps within a {cfg.waveform.period} ps cycle)")
    return 0


def _cmd_hbt(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    hist = simulate_hbt(cfg.source, cfg.detector, cfg.cycles, cfg.seed, cfg.workers)
    hist.to_csv(out / "hbt_histogram.csv")
    report = peak_areas(hist, cfg.waveform.period, cfg.window_half_width)
    report.to_json(out / "hbt_areas.json")
    report.to_csv(out / "hbt_areas.csv")
    g2 = g2_zero(report)
    print(f"g2(0) = {g2:.4f}  (baseline {report.baseline_rate:.3g} counts/bin)")
    _write_manifest(out, "hbt", cfg.raw, cfg.seed, cfg.cycles,
                    ["hbt_histogram.csv", "hbt_histogram.meta.json",
                     "hbt_areas.json", "hbt_areas.csv"])
    return 0


def _cmd_hom(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    hist = simulate_hom(cfg.source, cfg.interferometer, cfg.detector,
                        cfg.cycles, cfg.seed, cfg.workers)
    hist.to_csv(out / "hom_histogram.csv")
    report = peak_areas(hist, cfg.waveform.period, cfg.window_half_width)
    report.to_json(out / "hom_areas.json")
    report.to_csv(out / "hom_areas.csv")
    vis = visibility_from_areas(report)
    summary = {
        "mode": cfg.interferometer.mode.value,
        "central_area": report.areas[0],
        "visibility_raw": vis.value,
        "visibility_clamped": vis.clamped,
    }
    if report.baseline_rate > 0:
        corrected = correct_dark_counts(report)
        vis_c = visibility_from_areas(corrected)
        summary["visibility_dark_corrected"] = vis_c.value
        summary["visibility_dark_corrected_clamped"] = vis_c.clamped
    with open(out / "hom_summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"central area {report.areas[0]:.4f} -> raw visibility {vis.value:.4f}"
          + (" (clamped)" if vis.clamped else ""))
    if "visibility_dark_corrected" in summary:
        print(f"dark-corrected visibility {summary['visibility_dark_corrected']:.4f}")
    _write_manifest(out, "hom", cfg.raw, cfg.seed, cfg.cycles,
                    ["hom_histogram.csv", "hom_histogram.meta.json",
                     "hom_areas.json", "hom_areas.csv", "hom_summary.json"])
    return 0


def _cmd_dip(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    mode = Mode.ORTHOGONAL if args.orthogonal else Mode.PARALLEL
    curve = dip_curve(
        _deltas(args), cfg.emitter, cfg.gate, cfg.jitter,
        chirp_on=args.chirp, waveform=cfg.waveform,
        packet_decay=cfg.source.packet_decay,
        dephasing_rate=cfg.source.packet_dephasing,
        mode=mode,
    )
    curve.to_csv(out / "dip.csv")
    areas = curve.areas
    print(f"dip scan: {len(areas)} points, min area {areas.min():.4f} "
          f"at delta {curve.deltas[int(np.argmin(areas))]:.1f} ps, "
          f"visibility {1 - 2 * areas.min():.4f}")
    _write_manifest(out, "dip", cfg.raw, None, None, ["dip.csv"])
    return 0


def _cmd_dip_mc(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    deltas = _deltas(args)
    rows = []
    for i, delta in enumerate(deltas):
        # only the period-delay mismatch is physical, so the scan shifts
        # the interferometer delay instead of rebuilding the waveform
        mz = InterferometerSim(
            delay=cfg.waveform.period - float(delta),
            split_a=cfg.interferometer.split_a,
            split_b=cfg.interferometer.split_b,
            mode=Mode.ORTHOGONAL if args.orthogonal else Mode.PARALLEL,
        )
        hist = simulate_hom(cfg.source, mz, cfg.detector, cfg.cycles,
                            cfg.seed + i, cfg.workers)
        report = peak_areas(hist, cfg.waveform.period, cfg.window_half_width)
        outer = np.mean([report.raw_counts[n] for n in range(-6, 7) if abs(n) >= 2])
        err = report.areas[0] * np.sqrt(
            1.0 / max(report.raw_counts[0], 1.0) + 1.0 / (10.0 * max(outer, 1.0)))
        rows.append((float(delta), report.areas[0], float(err)))
    with open(out / "dip_mc.csv", "w") as f:
        f.write("delta_ps,central_area,stderr\n")
        for d, a, e in rows:
            f.write(f"{d:.12g},{a:.12g},{e:.12g}\n")
    print(f"Monte Carlo dip scan: {len(rows)} points x {cfg.cycles} cycles")
    _write_manifest(out, "dip-mc", cfg.raw, cfg.seed, cfg.cycles, ["dip_mc.csv"])
    return 0


def _cmd_fit(args) -> int:
    cfg = load_config(args.config)
    data_path = Path(args.data)
    if not data_path.exists():
        raise ValidationError(f"data file not found: {data_path}")
    rows = []
    with open(data_path) as f:
        header = f.readline().strip().split(",")
        if header[:2] != ["delta_ps", "central_area"]:
            raise ValidationError(f"unexpected fit-data header {header!r}")
        for line in f:
            if line.strip():
                rows.append([float(x) for x in line.split(",")[: 3]])
    result = fit_dip(rows, (args.tau0, args.sigma0), cfg.emitter, cfg.gate,
                     interpretation=cfg.jitter.interpretation)
    out = _out_dir(args)
    result.to_json(out / "fit.json")
    print("dip fit" + (" (converged)" if result.converged else " (NOT converged)"))
    print(result.summary())
    _write_manifest(out, "fit", cfg.raw, None, None, ["fit.json"])
    return 0


def _cmd_relations(args) -> int:
    t2_star = dephasing_time(args.t1, args.t2)
    vis_fixed = fixed_bias_visibility(args.t1, args.t2)
    print(f"T1 = {args.t1:g} ps, T2 = {args.t2:g} ps")
    print(f"pure dephasing time T2* = {t2_star:.4g} ps")
    print(f"fixed-bias visibility T2/(2 T1) = {vis_fixed:.4g}")
    if args.g2 is not None:
        ok = entanglement_criterion(args.visibility, args.g2)
        print(f"entanglement criterion: visibility {args.visibility:g} > "
              f"2 x g2(0) {2 * args.g2:g} -> {'fulfilled' if ok else 'not fulfilled'}")
    return 0


def _cmd_emit_plot_data(args) -> int:
    src = Path(args.result)
    if not src.exists():
        raise ValidationError(f"result file not found: {src}")
    out = _out_dir(args)
    dest = out / (src.stem + "_plot.csv")
    if src.suffix == ".json":
        doc = json.loads(src.read_text())
        if "areas" in doc:
            with open(dest, "w") as f:
                f.write("peak_index,area\n")
                for k in sorted(doc["areas"], key=int):
                    f.write(f"{k},{doc['areas'][k]:.12g}\n")
            print(dest)
            return 0
        raise ValidationError(f"unrecognized JSON result schema in {src}")
    with open(src) as f:
        header = f.readline().strip()
        body = f.read()
    if header == "bin_start_ps,counts":
        with open(dest, "w") as f:
            f.write("time_ns,counts\n")
            for line in body.splitlines():
                if line.strip():
                    s, c = line.split(",")
                    f.write(f"{(float(s)) / 1e3:.12g},{c}\n")
    elif header == "delta_ps,central_area":
        with open(dest, "w") as f:
            f.write("x,y\n")
            f.write(body)
    elif header == "delta_ps,central_area,stderr":
        with open(dest, "w") as f:
            f.write("x,y,yerr\n")
            f.write(body)
    else:
        raise ValidationError(f"unrecognized result header {header!r} in {src}")
    print(dest)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="photondiode",
        description="Simulator and analysis toolkit for an electrically "
                    "gated single-photon diode performing two-photon interference.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand")

    def add_common(sp, config=True, sim=False, scan=False):
        sp.add_argument("--out-dir", default=None,
                        help="output directory (default: $PHOTONDIODE_OUT_DIR or .)")
        if config:
            sp.add_argument("--config", required=True, help="JSON run configuration")
        if sim:
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--cycles", type=int, default=None)
            sp.add_argument("--workers", type=int, default=None)
        if scan:
            sp.add_argument("--delta-min", type=float, default=-400.0)
            sp.add_argument("--delta-max", type=float, default=400.0)
            sp.add_argument("--delta-step", type=float, default=20.0)
            sp.add_argument("--orthogonal", action="store_true",
                            help="orthogonal-polarization control")

    sp = sub.add_parser("waveform", help="emit drive waveform, line energy and gate")
    add_common(sp)
    sp.add_argument("--samples", type=int, default=2001)
    sp.set_defaults(func=_cmd_waveform)

    sp = sub.add_parser("hbt", help="simulate and analyze an HBT run")
    add_common(sp, sim=True)
    sp.set_defaults(func=_cmd_hbt)

    sp = sub.add_parser("hom", help="simulate and analyze a two-photon run")
    add_common(sp, sim=True)
    sp.add_argument("--orthogonal", action="store_true")
    sp.set_defaults(func=_cmd_hom)

    sp = sub.add_parser("dip", help="analytic dip scan")
    add_common(sp, scan=True)
    sp.add_argument("--chirp", action="store_true",
                    help="include the Stark chirp across the gate")
    sp.set_defaults(func=_cmd_dip)

    sp = sub.add_parser("dip-mc", help="Monte Carlo dip scan")
    add_common(sp, sim=True, scan=True)
    sp.set_defaults(func=_cmd_dip_mc)

    sp = sub.add_parser("fit", help="fit the dip model to a CSV")
    add_common(sp)
    sp.add_argument("--data", required=True, help="CSV: delta_ps,central_area[,weight]")
    sp.add_argument("--tau0", type=float, default=50.0, help="initial tau_c (ps)")
    sp.add_argument("--sigma0", type=float, default=20.0, help="initial sigma (ps)")
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("relations", help="closed-form scalar relations")
    sp.add_argument("--t1", type=float, required=True)
    sp.add_argument("--t2", type=float, required=True)
    sp.add_argument("--g2", type=float, default=None)
    sp.add_argument("--visibility", type=float, default=0.64,
                    help="measured dip visibility for the criterion")
    sp.set_defaults(func=_cmd_relations)

    sp = sub.add_parser("emit-plot-data", help="flatten a result file for plotting")
    add_common(sp, config=False)
    sp.add_argument("result", help="histogram CSV, dip CSV or areas JSON")
    sp.set_defaults(func=_cmd_emit_plot_data)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the validation code
        return 0 if exc.code in (0, None) else 1
    if not getattr(args, "func", None):
        parser.print_usage()
        return 1
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
