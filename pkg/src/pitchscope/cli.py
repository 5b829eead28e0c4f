"""Command line front end: analyze, calibrate-snr, bench, dump-window, serve."""
from __future__ import annotations

import argparse
import platform
import sys
import time

import numpy as np

from . import __version__
from .errors import CalibrationError, FormatError, PitchscopeError
from .filterbank import design_bank
from .pipeline import Analyzer, AnalyzerSettings, calibrate_contour
from .snr import CalibrationTable, calibrate, self_check
from .wavio import ensure_rate, read_wav
from .windows import ENVELOPE_KINDS, analytic_impulse_response
from .wire import frame_record, write_frame_log

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_CALIBRATION = 3

CSV_HEADER = ("t_s,f1,snr1,f2,snr2,f3,snr3,f4,snr4,salience_db,best_f_hz")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pitchscope",
                                description="fundamental-frequency candidate analysis")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--hop-ms", type=float, default=5.0,
                        help="hop size in milliseconds (default 5)")
        sp.add_argument("--f-lo", type=float, default=80.0)
        sp.add_argument("--f-hi", type=float, default=5000.0)
        sp.add_argument("--per-octave", type=int, default=6)
        sp.add_argument("--c-mag", type=float, default=1.05)
        sp.add_argument("--salience-db", type=float, default=15.0)
        sp.add_argument("--envelope", choices=ENVELOPE_KINDS, default="sixterm")

    sp = sub.add_parser("analyze", help="WAV file to candidate trajectories CSV")
    common(sp)
    sp.add_argument("input")
    sp.add_argument("-o", "--output", default="-", help="CSV path (default stdout)")
    sp.add_argument("--table", help="mean-measure calibration table path")
    sp.add_argument("--frame-log", help="also write the full frame record log")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("calibrate-snr", help="regenerate an SNR calibration table")
    common(sp)
    sp.add_argument("-o", "--output", required=True, help="table output path")
    sp.add_argument("--curve-csv", help="write the measured curve as CSV")
    sp.add_argument("--measure", choices=("pair", "contour"), default="pair")
    sp.add_argument("--grid-step", type=float, default=5.0)
    sp.add_argument("--duration", type=float, default=1.5)
    sp.add_argument("--seed", type=int, default=20260808)
    sp.add_argument("--skip-check", action="store_true",
                    help="skip the fresh-seed self check")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("bench", help="throughput report")
    common(sp)
    sp.add_argument("--seconds", type=float, default=5.0)
    sp.add_argument("--mode", choices=("single", "full", "both"), default="both")
    sp.add_argument("--audio-rate", action="store_true",
                    help="also report a hop=1 sample run (informational)")
    sp.add_argument("-o", "--output", help="CSV output path")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("dump-window", help="window / impulse response samples as CSV")
    sp.add_argument("--kind", choices=ENVELOPE_KINDS, default="sixterm")
    sp.add_argument("--f-c", type=float, required=True)
    sp.add_argument("--c-mag", type=float, default=1.05)
    sp.add_argument("--f-s", type=float, default=44100.0)
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_dump_window)

    sp = sub.add_parser("serve", help="run the live analysis service")
    common(sp)
    sp.add_argument("--listen", default="127.0.0.1:8765", help="host:port")
    sp.add_argument("--input", default="none",
                    help="WAV file to stream, or 'none' for an idle service")
    sp.add_argument("--config", help="session config path")
    sp.add_argument("--pace", action="store_true",
                    help="feed file input at real-time speed")
    sp.add_argument("--table", help="mean-measure calibration table path")
    sp.set_defaults(func=cmd_serve)
    return p


def settings_from(args) -> AnalyzerSettings:
    fs = 44100.0
    return AnalyzerSettings(
        sample_rate_hz=fs,
        hop_samples=max(1, int(round(fs * args.hop_ms / 1000.0))),
        f_lo=args.f_lo, f_hi=args.f_hi, per_octave=args.per_octave,
        c_mag=args.c_mag, envelope=args.envelope,
        salience_threshold_db=args.salience_db)


def frames_to_csv_rows(frames) -> list[str]:
    rows = [CSV_HEADER]
    for f in frames:
        cells = [repr(f.t_ms / 1000.0)]
        for i in range(4):
            if i < len(f.candidates):
                c = f.candidates[i]
                snr = "" if not np.isfinite(c.snr_db) else repr(c.snr_db)
                cells += [repr(c.freq_hz), snr]
            else:
                cells += ["", ""]
        cells.append(repr(f.salience_db))
        cells.append("" if f.best is None else repr(f.best.freq_hz))
        rows.append(",".join(cells))
    return rows


def cmd_analyze(args) -> int:
    try:
        samples, fs = read_wav(args.input)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    settings = settings_from(args)
    samples = ensure_rate(samples, fs, int(settings.sample_rate_hz))
    table = CalibrationTable.load(args.table) if args.table else None
    analyzer = Analyzer(settings=settings, table=table)
    frames = analyzer.feed(samples)
    frames.extend(analyzer.finish())
    rows = frames_to_csv_rows(frames)
    if args.output == "-":
        print("\n".join(rows))
    else:
        with open(args.output, "w") as fh:
            fh.write("\n".join(rows) + "\n")
    if args.frame_log:
        write_frame_log(args.frame_log,
                        (frame_record(f, phase_maps=True) for f in frames))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    grid = np.arange(10.0, 80.0 + 1e-9, args.grid_step)
    hop = max(1, int(round(44100.0 * args.hop_ms / 1000.0)))
    build = calibrate_contour if args.measure == "contour" else calibrate
    try:
        table = build(args.envelope, args.c_mag, 44100.0, snr_grid=grid,
                      hop_samples=hop, duration_s=args.duration, seed=args.seed)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        for pair in exc.offending:
            print(f"  offending: {pair}", file=sys.stderr)
        return EXIT_CALIBRATION
    rows = []
    flagged = []
    if not args.skip_check:
        rows = self_check(table, snr_grid=grid)
        flagged = [r for r in rows if abs(r[2]) > 3.0]
        for true, est, err in flagged:
            print(f"warning: {true:.0f} dB estimates as {est:.1f} dB "
                  f"(error {err:+.1f} dB)", file=sys.stderr)
    table.save(args.output)
    print(f"wrote {args.output}: {len(table.knots)} knots, envelope "
          f"{table.envelope}, measure {table.measure}"
          + (f", {len(flagged)} grid points exceed 3 dB" if flagged else ""))
    if args.curve_csv:
        with open(args.curve_csv, "w") as fh:
            fh.write("snr_db,variation,estimated_db,error_db,warning\n")
            checked = {r[0]: r for r in rows}
            for v, s in table.raw_points:
                est = checked.get(s, (s, "", ""))[1]
                err = checked.get(s, (s, "", ""))[2]
                warn = "1" if s in {r[0] for r in flagged} else ""
                fh.write(f"{s},{v!r},{est!r},{err!r},{warn}\n")
    return EXIT_OK


def bench_signal(seconds: float, f_s: float) -> np.ndarray:
    rng = np.random.default_rng(0)
    t = np.arange(int(seconds * f_s)) / f_s
    return np.sin(2 * np.pi * 220.0 * t) + 0.01 * rng.standard_normal(len(t))


def bench_single_estimator(seconds: float, settings: AnalyzerSettings,
                           hop_samples: int | None = None) -> float:
    """x-real-time of the one-channel attribute+SNR stream (snr_series)."""
    from .snr import default_table, snr_series

    mini = design_bank(120.0, 120.0 * 2 ** (1 / 6.0), 6, settings.c_mag,
                       settings.sample_rate_hz, settings.envelope)
    table = default_table()
    x = bench_signal(seconds, settings.sample_rate_hz)
    start = time.perf_counter()
    snr_series(mini, x, table, hop_samples=hop_samples or settings.hop_samples)
    return seconds / (time.perf_counter() - start)


def bench_full_bank(seconds: float, settings: AnalyzerSettings) -> float:
    """x-real-time of the complete frame pipeline on the default bank."""
    x = bench_signal(seconds, settings.sample_rate_hz)
    analyzer = Analyzer(settings=settings)
    chunk = 4410
    start = time.perf_counter()
    for i in range(0, len(x), chunk):
        analyzer.feed(x[i:i + chunk])
    analyzer.finish()
    return seconds / (time.perf_counter() - start)


def cmd_bench(args) -> int:
    results = []
    base = settings_from(args)
    if args.mode in ("single", "both"):
        speed = bench_single_estimator(args.seconds, base)
        results.append(("single_estimator", speed, 50.0))
    if args.mode in ("full", "both"):
        speed = bench_full_bank(args.seconds, base)
        results.append(("full_bank", speed, 1.0))
    if args.audio_rate:
        speed = bench_single_estimator(min(args.seconds, 1.0), base, hop_samples=1)
        results.append(("audio_rate_hop1", speed, None))

    info = f"{platform.system()} {platform.machine()}, python {platform.python_version()}, numpy {np.__version__}"
    print(f"# {info}")
    print(f"# hop {base.hop_samples} samples, {args.seconds:.1f} s of input")
    print("# single_estimator = one-channel attribute+SNR stream; "
          "full_bank = complete frame pipeline")
    ok = True
    lines = ["mode,x_real_time,floor,passed"]
    for name, speed, floor in results:
        verdict = "" if floor is None else ("PASS" if speed >= floor else "FAIL")
        ok &= verdict != "FAIL"
        floor_txt = "" if floor is None else f"{floor:.0f}"
        print(f"{name}: {speed:.1f}x real time"
              + (f" (floor {floor_txt}x: {verdict})" if verdict else " (informational)"))
        lines.append(f"{name},{speed:.3f},{floor_txt},{verdict}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else 1


def cmd_dump_window(args) -> int:
    try:
        resp = analytic_impulse_response(args.f_c, args.c_mag, args.f_s,
                                         envelope=args.kind)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    rows = ["t_s,real,imag"]
    for t, v in zip(resp.times_s.tolist(), resp.samples.tolist()):
        rows.append(f"{t!r},{v.real!r},{v.imag!r}")
    text = "\n".join(rows)
    if args.output == "-":
        print(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import threading

    from .service import StreamService, serve

    host, _, port = args.listen.rpartition(":")
    settings = settings_from(args)
    table = CalibrationTable.load(args.table) if args.table else None
    service = StreamService(settings=settings, table=table,
                            config_path=args.config)
    server = serve(service, host or "127.0.0.1", int(port))
    accept = threading.Thread(target=server.serve_forever, daemon=True)
    accept.start()
    print(f"listening on ws://{host or '127.0.0.1'}:{port}", flush=True)
    try:
        if args.input != "none":
            service.run_wav(args.input, pace=args.pace)
            print("input finished; serving until QUIT", flush=True)
        while service.running:
            time.sleep(0.2)
    except KeyboardInterrupt:
        service.running = False
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PitchscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
