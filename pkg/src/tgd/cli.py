"""Command-line front end.

One binary with subcommands (make-op, synth, denoise, edge2d, edge3d,
metrics).  Every run is fully determined by flags + optional config file
+ seed; identical inputs produce byte-identical outputs.  Exit codes:
0 success, 2 usage/configuration error, 3 data or shape error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, edge2d, edge3d, fileio, metrics, operators
from .denoise import DenoiseConfig, default_operators, denoise as run_denoise, gaussian_smooth
from .errors import ConfigError, DataError, DivergenceError, OperatorNotFoundError, ShapeError

# config-file keys allowed per subcommand, with their parsers
_CONFIG_KEYS = {
    "denoise": {
        "lambda_1st": float, "lambda_2nd": float, "lambda_offset": float,
        "p": int, "squared": lambda s: s.lower() in ("1", "true", "yes"),
        "epochs": int, "lr": float, "decay_every": int, "decay_factor": float,
        "op_size": int, "op_kind": str, "trim": int, "method": str,
    },
    "edge2d": {
        "method": str, "size": int, "profile": str, "construction": str,
        "low": str, "high": str, "lot_thr": str,
    },
    "edge3d": {
        "xy_size": int, "t_size": int, "repeat": int, "stride": int,
        "thr1": str, "thr2": str, "low": str, "high": str,
    },
    "synth": {
        "noise": str, "sigma": float, "target_snr": float, "seed": int,
    },
    "make-op": {
        "kind": str, "radius": int, "shape": float, "order": int,
        "rank": int, "direction": str, "construction": str,
    },
    "metrics": {"max_value": float},
}


def load_config(path, command: str) -> dict:
    """Parse ``key = value`` lines; unknown keys are usage errors."""
    allowed = _CONFIG_KEYS.get(command, {})
    values = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in allowed:
            raise ConfigError(
                f"{path}:{lineno}: unknown key {key!r} for {command}; "
                f"valid keys: {', '.join(sorted(allowed))}"
            )
        try:
            values[key] = allowed[key](raw)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {raw!r}") from None
    return values


def _merge_config(args, defaults: dict):
    """Fill argparse Nones from the config file, then from defaults."""
    config = {}
    if args.config:
        config = load_config(args.config, args.command)
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, default))
    return args


def _no_overwrite(inputs, outputs):
    resolved = {Path(p).resolve() for p in inputs if p}
    for out in outputs:
        if out and Path(out).resolve() in resolved:
            raise ConfigError(f"output {out} would overwrite an input")


def _parse_range(spec: str) -> tuple[int, int]:
    try:
        a, b = spec.split("..")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"bad range {spec!r}; expected A..B") from None


def _thr(spec: str, values) -> float:
    try:
        return float(spec)
    except ValueError:
        return edge2d.percentile_threshold(values, spec)


# --- subcommand implementations ---------------------------------------------

def _cmd_make_op(args):
    defaults = {"kind": "gaussian", "radius": 7, "shape": None, "order": 1,
                "rank": 1, "direction": None, "construction": "rotational"}
    _merge_config(args, defaults)
    _no_overwrite([args.config], [args.output])
    if args.preset:
        op = operators.preset(args.preset)
    else:
        profile = operators.KernelProfile(args.kind, args.radius, args.shape)
        if args.rank == 1:
            build = (operators.build_first_order_1d if args.order == 1
                     else operators.build_second_order_1d)
            op = build(profile, direction=args.direction)
        elif args.rank == 2:
            if args.direction == "laplacian":
                op = operators.build_lot_2d(profile)
            else:
                if args.direction is None:
                    raise ConfigError("rank-2 operators need --direction (0/45/90/135/laplacian)")
                op = operators.build_directional_2d(profile, args.order, args.direction,
                                                    args.construction)
        else:
            if args.order != 1:
                raise ConfigError("rank-3 operators are first-order only")
            if args.direction not in operators.AXES_3D:
                raise ConfigError("rank-3 operators need --direction x, y or t")
            op = operators.build_first_order_3d(profile, args.direction)
    Path(args.output).write_text(operators.to_text(op))
    fileio.write_manifest(str(args.output) + ".manifest.txt", "make-op",
                          _manifest_params(args), [args.config] if args.config else [])
    return 0


def _phantom_params(pairs):
    params = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"bad --param {pair!r}; expected key=value")
        key, _, raw = pair.partition("=")
        try:
            params[key] = float(raw) if "." in raw or "e" in raw.lower() else int(raw)
        except ValueError:
            raise ConfigError(f"bad --param value for {key!r}: {raw!r}") from None
    return params


def _cmd_synth(args):
    defaults = {"noise": None, "sigma": None, "target_snr": None, "seed": 0}
    _merge_config(args, defaults)
    _no_overwrite([args.config], [args.output])
    out = Path(args.output)
    if args.signal:
        a, b = _parse_range(args.n)
        clean = metrics.synth_signal(args.signal, a, b)
        data = clean
        if args.noise:
            spec = metrics.NoiseSpec(args.noise, sigma=args.sigma,
                                     target_snr_db=args.target_snr, seed=args.seed)
            data, _ = metrics.add_noise(clean, spec)
        fileio.write_signal(out, data)
        if args.clean_out:
            fileio.write_signal(args.clean_out, clean)
    else:
        phantom = metrics.synth_phantom(args.phantom, **_phantom_params(args.param))
        data = phantom.data
        if data.ndim == 2:
            fileio.write_pgm(out, np.clip(np.round(data), 0, 255).astype(np.uint8))
        else:
            out.mkdir(parents=True, exist_ok=True)
            for t in range(data.shape[0]):
                fileio.write_pgm(out / f"frame_{t:04d}.pgm",
                                 np.clip(np.round(data[t]), 0, 255).astype(np.uint8))
        truth_path = out.with_suffix(out.suffix + ".truth.json") if data.ndim == 2 \
            else out / "truth.json"
        truth = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                 for k, v in phantom.truth.items()}
        truth_path.write_text(json.dumps(truth, sort_keys=True) + "\n")
    manifest = str(out) + ".manifest.txt" if not out.is_dir() else str(out / "manifest.txt")
    fileio.write_manifest(manifest, "synth", _manifest_params(args),
                          [args.config] if args.config else [])
    return 0


def _cmd_denoise(args):
    defaults = {"lambda_1st": 1.0, "lambda_2nd": 10.0, "lambda_offset": 0.01,
                "p": 2, "squared": True, "epochs": 20000, "lr": 0.01,
                "decay_every": 10000, "decay_factor": 0.1,
                "op_size": 51, "op_kind": "gaussian", "trim": 0, "method": "tgd"}
    _merge_config(args, defaults)
    inputs = [args.input, args.clean, args.config]
    _no_overwrite(inputs, [args.output, args.history, args.report])
    noisy = fileio.read_signal(args.input)
    if args.method == "gaussian":
        result = gaussian_smooth(noisy, args.op_size)
        history = None
    elif args.method == "tgd":
        first_op, second_op = default_operators(args.op_size, args.op_kind)
        cfg = DenoiseConfig(
            lambda_1st=args.lambda_1st, lambda_2nd=args.lambda_2nd,
            lambda_offset=args.lambda_offset, p=args.p, squared=args.squared,
            first_ops=[first_op], second_ops=[second_op],
            epochs=args.epochs, lr=args.lr,
            decay_every=args.decay_every, decay_factor=args.decay_factor)
        result, history = run_denoise(noisy, cfg)
    else:
        raise ConfigError(f"unknown denoise method {args.method!r}; expected tgd or gaussian")
    fileio.write_signal(args.output, result)
    if args.history and history is not None:
        fileio.write_history(args.history, history)
    if args.report:
        if not args.clean:
            raise ConfigError("--report needs --clean for the reference signal")
        clean = fileio.read_signal(args.clean)
        t = args.trim
        sl = slice(t, len(clean) - t) if t else slice(None)
        rep = metrics.report(clean[sl], result[sl], noise=(noisy - clean)[sl])
        Path(args.report).write_text(
            metrics.MetricReport.csv_header() + "\n" + rep.csv_line() + "\n")
    fileio.write_manifest(str(args.output) + ".manifest.txt", "denoise",
                          _manifest_params(args), [p for p in inputs if p])
    return 0


def _cmd_edge2d(args):
    defaults = {"method": "tgd1", "size": 13, "profile": None,
                "construction": "rotational", "low": "p70", "high": "p90",
                "lot_thr": "p50"}
    _merge_config(args, defaults)
    outdir = Path(args.output)
    _no_overwrite([args.input, args.config], [])
    image = np.asarray(fileio.read_image(args.input), dtype=np.float64)
    outdir.mkdir(parents=True, exist_ok=True)

    if args.method == "tgd1":
        kind = args.profile or "exponential"
        ops = edge2d.default_first_order_ops(args.size, kind, args.construction)
        gf = edge2d.gradient_field(image, ops)
        nms = edge2d.non_max_suppression(gf)
        low = _thr(args.low, nms[nms > 0])
        high = _thr(args.high, nms[nms > 0])
        edges = edge2d.hysteresis(nms, min(low, high), max(low, high))
        orientation = np.where(edges, gf.theta, 0.0)
    elif args.method == "lot":
        kind = args.profile or "gaussian"
        from .conv import convolve
        lot_op = edge2d.default_lot_op(args.size, kind)
        grad_l = convolve(image, lot_op)
        thr = _thr(args.lot_thr, grad_l)
        result = edge2d.detect_edges_lot(image, edge2d.default_second_order_ops(args.size, kind),
                                         lot_op, thr)
        edges, orientation = result.edges, result.orientation
    elif args.method == "canny-baseline":
        dx, dy = edge2d.gaussian_sobel_gradient(image, args.size)
        grad = np.sqrt(dx * dx + dy * dy)
        nms = edge2d.non_max_suppression(grad, edge2d._theta_from(dx, dy))
        low = _thr(args.low, nms[nms > 0])
        high = _thr(args.high, nms[nms > 0])
        result = edge2d.detect_edges_gaussian_derivative(image, args.size,
                                                         min(low, high), max(low, high))
        edges, orientation = result.edges, result.orientation
    elif args.method == "log-baseline":
        from .conv import convolve
        grad_l = convolve(image, edge2d.log_kernel(args.size))
        thr = _thr(args.lot_thr, grad_l)
        result = edge2d.detect_edges_log(image, args.size, thr)
        edges, orientation = result.edges, result.orientation
    else:
        raise ConfigError(f"unknown edge2d method {args.method!r}; "
                          "expected tgd1, lot, canny-baseline or log-baseline")

    fileio.write_pgm(outdir / "edges.pgm", np.where(edges, 255, 0).astype(np.uint8))
    fileio.write_orientation_csv(outdir / "orientation.csv", orientation, edges)
    fileio.write_png(outdir / "orientation.png", fileio.orientation_png(orientation, edges))
    fileio.write_manifest(outdir / "manifest.txt", "edge2d", _manifest_params(args),
                          [p for p in (args.input, args.config) if p])
    return 0


def _cmd_edge3d(args):
    defaults = {"xy_size": 15, "t_size": 15, "repeat": 1, "stride": 1,
                "thr1": "p95", "thr2": "p95", "low": "p70", "high": "p90"}
    _merge_config(args, defaults)
    src = Path(args.input)
    outdir = Path(args.output)
    _no_overwrite([args.input, args.config], [])
    if src.is_dir():
        frames = fileio.read_frame_dir(src)
        stem = src.name
    else:
        frames = np.stack([np.asarray(f, dtype=np.float64)
                           for f in fileio.read_pgm_stream(src)])
        stem = src.stem
    seq = edge3d.scale_time(frames, args.repeat, args.stride)
    window = seq.frames.shape[0]
    if window > args.t_size:  # center window of the scaled sequence
        start = (window - args.t_size) // 2
        seq = edge3d.FrameSequence(seq.frames[start:start + args.t_size],
                                   seq.effective_count, seq.repeat, seq.stride)

    xy_profile = operators.KernelProfile("gaussian", (args.xy_size - 1) // 2)
    t_profile = operators.KernelProfile("linear", (args.t_size - 1) // 2)
    op_x = operators.build_first_order_3d(xy_profile, "x")
    op_y = operators.build_first_order_3d(xy_profile, "y")
    op_t = operators.build_first_order_1d(t_profile, direction="t")
    op_tt = operators.build_second_order_1d(t_profile, direction="t")

    from .conv import convolve
    center = seq.frames.shape[0] // 2
    dt = convolve(seq.frames, op_t, axis=0)[center]
    d2t = convolve(seq.frames, op_tt, axis=0)[center]
    vol_dx = convolve(seq.frames, op_x)[center]
    vol_dy = convolve(seq.frames, op_y)[center]
    grad = np.sqrt(vol_dx ** 2 + vol_dy ** 2)
    nms = edge2d.non_max_suppression(grad, edge2d._theta_from(vol_dx, vol_dy))
    low = _thr(args.low, nms[nms > 0])
    high = _thr(args.high, nms[nms > 0])
    result = edge3d.detect_3d(seq, op_x, op_y, op_t, op_tt,
                              _thr(args.thr1, np.abs(dt)), _thr(args.thr2, np.abs(d2t)),
                              min(low, high), max(low, high))

    outdir.mkdir(parents=True, exist_ok=True)
    fileio.write_pgm(outdir / f"{stem}_static.pgm",
                     np.where(result.static, 255, 0).astype(np.uint8))
    fileio.write_pgm(outdir / f"{stem}_kinetic.pgm",
                     np.where(result.kinetic, 255, 0).astype(np.uint8))
    fileio.write_png(outdir / f"{stem}_merge.png", result.merge)
    fileio.write_float_grid(outdir / f"{stem}_dt.tgdf", result.dt)
    fileio.write_float_grid(outdir / f"{stem}_d2t.tgdf", result.d2t)
    fileio.write_manifest(outdir / "manifest.txt", "edge3d", _manifest_params(args),
                          [args.config] if args.config else [])
    return 0


def _cmd_metrics(args):
    defaults = {"max_value": None}
    _merge_config(args, defaults)
    _no_overwrite([args.reference, args.estimate, args.config], [args.output])
    ref_path, est_path = Path(args.reference), Path(args.estimate)
    if ref_path.suffix.lower() in (".pgm", ".png"):
        ref = np.asarray(fileio.read_image(ref_path), dtype=np.float64)
        est = np.asarray(fileio.read_image(est_path), dtype=np.float64)
    else:
        ref = fileio.read_signal(ref_path)
        est = fileio.read_signal(est_path)
    rep = metrics.MetricReport(
        rmse=metrics.rmse(ref, est),
        psnr_db=metrics.psnr(ref, est, args.max_value),
        ssim=metrics.ssim(ref.ravel(), est.ravel()),
        max_value=args.max_value if args.max_value is not None else float(np.max(ref)),
        dynamic_range=float(np.max(ref) - np.min(ref)),
    )
    print(rep)
    if args.output:
        Path(args.output).write_text(
            metrics.MetricReport.csv_header() + "\n" + rep.csv_line() + "\n")
        fileio.write_manifest(str(args.output) + ".manifest.txt", "metrics",
                              _manifest_params(args),
                              [args.reference, args.estimate])
    return 0


def _manifest_params(args) -> dict:
    skip = {"command", "func", "config"}
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and v is not None}


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tgd",
        description="Difference-operator toolkit: denoising, edge detection, "
                    "spatio-temporal analysis.",
    )
    parser.add_argument("--version", action="version", version=f"tgd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value overrides (flags win)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap (results are identical at any value)")

    p = sub.add_parser("make-op", help="construct an operator and write it as tgd-op text")
    common(p)
    p.add_argument("--preset", help=f"verbatim preset: {', '.join(operators.preset_names())}")
    p.add_argument("--kind", choices=operators.KINDS, help="profile kind (default gaussian)")
    p.add_argument("--radius", type=int, help="profile half-width r (default 7)")
    p.add_argument("--shape", type=float, help="sigma / decay rate override")
    p.add_argument("--order", type=int, choices=(1, 2), help="difference order (default 1)")
    p.add_argument("--rank", type=int, choices=(1, 2, 3), help="grid rank (default 1)")
    p.add_argument("--direction", help="0/45/90/135, x/y/t, or laplacian")
    p.add_argument("--construction", choices=("rotational", "orthogonal"),
                   help="2D construction method (default rotational)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_make_op)

    p = sub.add_parser("synth", help="generate benchmark signals and phantoms")
    common(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--signal", choices=("X1", "X2"))
    group.add_argument("--phantom",
                       choices=("step", "ramp", "sigmoid-edge", "text-stroke",
                                "moving-square", "pendulum"))
    p.add_argument("--n", default="0..1000", help="sample range A..B inclusive")
    p.add_argument("--noise", choices=("gaussian", "uniform"))
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--target-snr", dest="target_snr", type=float,
                   help="scale noise to this SNR in dB")
    p.add_argument("--seed", type=int, help="noise seed (default 0)")
    p.add_argument("--param", action="append", help="phantom parameter key=value")
    p.add_argument("--clean-out", dest="clean_out", help="also write the clean signal here")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("denoise", help="difference-continuity denoising of a CSV signal")
    common(p)
    p.add_argument("-i", "--input", required=True, help="noisy signal CSV")
    p.add_argument("--clean", help="clean reference CSV (enables --report)")
    p.add_argument("-o", "--output", required=True, help="denoised signal CSV")
    p.add_argument("--history", help="loss history CSV")
    p.add_argument("--report", help="metric report CSV (vs --clean)")
    p.add_argument("--method", choices=("tgd", "gaussian"), help="default tgd")
    p.add_argument("--lambda-1st", dest="lambda_1st", type=float)
    p.add_argument("--lambda-2nd", dest="lambda_2nd", type=float)
    p.add_argument("--lambda-offset", dest="lambda_offset", type=float)
    p.add_argument("--p", type=int, choices=(1, 2, 3), help="norm exponent (default 2)")
    p.add_argument("--squared", dest="squared", action="store_true", default=None,
                   help="drop the outer 1/p root (default)")
    p.add_argument("--no-squared", dest="squared", action="store_false", default=None)
    p.add_argument("--epochs", type=int, help="default 20000")
    p.add_argument("--lr", type=float, help="default 0.01")
    p.add_argument("--decay-every", dest="decay_every", type=int, help="default 10000")
    p.add_argument("--decay-factor", dest="decay_factor", type=float, help="default 0.1")
    p.add_argument("--op-size", dest="op_size", type=int, help="operator size (default 51)")
    p.add_argument("--op-kind", dest="op_kind", choices=operators.KINDS,
                   help="operator profile (default gaussian)")
    p.add_argument("--trim", type=int, help="ignore this many border samples in the report")
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("edge2d", help="edge detection on a grayscale image")
    common(p)
    p.add_argument("-i", "--input", required=True, help="PGM or PNG image")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--method", choices=("tgd1", "lot", "canny-baseline", "log-baseline"))
    p.add_argument("--size", type=int, help="kernel size (odd, default 13)")
    p.add_argument("--profile", choices=operators.KINDS,
                   help="default exponential for tgd1, gaussian for lot")
    p.add_argument("--construction", choices=("rotational", "orthogonal"))
    p.add_argument("--low", help="low threshold (number or pNN percentile, default p70)")
    p.add_argument("--high", help="high threshold (default p90)")
    p.add_argument("--lot-thr", dest="lot_thr", help="second-order response floor (default p50)")
    p.set_defaults(func=_cmd_edge2d)

    p = sub.add_parser("edge3d", help="static/kinetic edges of a frame sequence window")
    common(p)
    p.add_argument("-i", "--input", required=True,
                   help="directory of frames or multi-frame PGM stream")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--xy-size", dest="xy_size", type=int, help="spatial kernel size (default 15)")
    p.add_argument("--t-size", dest="t_size", type=int, help="temporal kernel size (default 15)")
    p.add_argument("--repeat", type=int, help="copies per frame (default 1)")
    p.add_argument("--stride", type=int, help="frame skip (default 1)")
    p.add_argument("--thr1", help="|dt| motion threshold (default p95)")
    p.add_argument("--thr2", help="|d2t| motion threshold (default p95)")
    p.add_argument("--low", help="static low threshold (default p70)")
    p.add_argument("--high", help="static high threshold (default p90)")
    p.set_defaults(func=_cmd_edge3d)

    p = sub.add_parser("metrics", help="compare two signals or images")
    common(p)
    p.add_argument("reference", help="reference CSV/PGM/PNG")
    p.add_argument("estimate", help="estimate CSV/PGM/PNG")
    p.add_argument("--max", dest="max_value", type=float,
                   help="PSNR MAX (default: max of reference)")
    p.add_argument("-o", "--output", help="write the report as CSV here")
    p.set_defaults(func=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"tgd {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DataError, ShapeError, OperatorNotFoundError, DivergenceError) as exc:
        print(f"tgd {args.command}: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"tgd {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
