"""Command line entry point: ``ggd noise|denoise|metrics|sweep|timing``."""

from __future__ import annotations

import argparse
import sys
import warnings

from ..datasets import resolve_image
from ..imagecore import GrayImage, center_crop, load_pgm, quantize, save_pgm
from ..lowrank import BACKENDS, BackendOptions
from ..metrics import evaluate
from ..noise import calibrate_sigma, contaminate, relative_noise
from ..pipeline import ConvergenceWarning, DenoiseParams, denoise_detailed
from .plan import DEFAULT_GRIDS, SweepPlan
from .records import CsvSink, best_rows, summary_line
from .svg import line_chart
from .sweep import run_sweep, run_timing

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

STAGES = ("patches", "knn", "geodesic", "gramian", "singular_vectors", "projection", "merge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _odd(text: str) -> int:
    v = int(text)
    if v < 3 or v % 2 == 0:
        raise argparse.ArgumentTypeError(f"rho must be an odd integer >= 3, got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _int_list(conv):
    def parse(text: str) -> list[int]:
        return [conv(t) for t in text.split(",") if t.strip()]
    return parse


def _backend_list(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if names == ["all"]:
        return list(BACKENDS)
    for n in names:
        if n not in BACKENDS:
            raise argparse.ArgumentTypeError(f"unknown backend {n!r}; choose from {sorted(BACKENDS)}")
    return names


def _geodesic(text: str) -> str:
    if text not in ("floyd", "dijkstra", "dijkstra_all"):
        raise argparse.ArgumentTypeError("geodesic must be floyd or dijkstra")
    return "dijkstra_all" if text == "dijkstra" else text


def _add_tuning(p):
    g = p.add_argument_group("backend tuning")
    g.add_argument("--tol", type=float, default=None, help="convergence tolerance")
    g.add_argument("--max-iters", type=_positive, default=None)
    g.add_argument("--lanczos-steps", type=_positive, default=None, help="ALB basis size")
    g.add_argument("--harmonic", action="store_true", help="ALB harmonic Ritz restarts")
    g.add_argument("--oversampling", type=int, default=0, help="RSVD oversampling")
    g.add_argument("--power-iters", type=int, default=0, help="RSVD power iterations")
    g.add_argument("--mcla-batch", type=_positive, default=None, help="MCLA columns per iteration")


def _options(args) -> BackendOptions:
    return BackendOptions(tolerance=args.tol, max_iterations=args.max_iters, seed=args.seed,
                          lanczos_steps=args.lanczos_steps, harmonic=args.harmonic,
                          oversampling=args.oversampling, power_iterations=args.power_iters,
                          mcla_batch=args.mcla_batch)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ggd", description="Geodesic Gramian denoising toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("noise", help="add calibrated Gaussian noise to a PGM")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--zeta", type=float, required=True, help="target relative noise in percent")
    p.add_argument("--tolerance", type=float, default=0.5, help="accepted |zeta - target|")
    p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("denoise", help="denoise one PGM")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--delta", type=_positive, default=10)
    p.add_argument("--rho", type=_odd, default=5)
    p.add_argument("--rank", type=_positive, default=20)
    p.add_argument("--backend", choices=sorted(BACKENDS), default="exact")
    p.add_argument("--geodesic", type=_geodesic, default="dijkstra_all")
    p.add_argument("--seed", type=_u64, default=0)
    _add_tuning(p)

    p = sub.add_parser("metrics", help="compare a test PGM against a reference")
    p.add_argument("reference")
    p.add_argument("test")

    p = sub.add_parser("sweep", help="parameter-grid sweep with best-row summaries")
    p.add_argument("images", nargs="+", help="PGM paths or bundled names (barbara, cameraman, mandrill)")
    p.add_argument("--zeta", type=lambda t: [float(z) for z in t.split(",")], default=[20.0],
                   help="comma-separated noise levels (default 20)")
    p.add_argument("--backend", "--backends", dest="backends", type=_backend_list,
                   default=["exact"], help="comma-separated backends, or 'all'")
    p.add_argument("--delta", type=_int_list(_positive), default=None, help="override delta grid")
    p.add_argument("--rho", type=_int_list(_odd), default=None, help="override rho grid")
    p.add_argument("--rank", type=_int_list(_positive), default=None, help="override rank grid")
    p.add_argument("--crop", type=int, default=64, help="centre-crop side (0 keeps the full image)")
    p.add_argument("--repetitions", type=_positive, default=1)
    p.add_argument("--noise-tolerance", type=float, default=0.5)
    p.add_argument("--cache-dir", default=".ggd-cache", help="where noisy images are kept")
    p.add_argument("--geodesic", type=_geodesic, default="dijkstra_all")
    p.add_argument("--csv", default=None)
    p.add_argument("--seed", type=_u64, default=0)
    _add_tuning(p)

    p = sub.add_parser("timing", help="backend timing over centre crops")
    p.add_argument("image")
    p.add_argument("--sizes", type=_int_list(_positive), default=[50, 60, 70, 80, 90, 100])
    p.add_argument("--delta", type=_positive, default=10)
    p.add_argument("--rho", type=_odd, default=5)
    p.add_argument("--rank", type=_positive, default=15)
    p.add_argument("--backend", "--backends", dest="backends", type=_backend_list,
                   default=list(BACKENDS))
    p.add_argument("--repetitions", type=_positive, default=3)
    p.add_argument("--zeta", type=float, default=20.0)
    p.add_argument("--geodesic", type=_geodesic, default="dijkstra_all")
    p.add_argument("--csv", default=None)
    p.add_argument("--svg", default=None)
    p.add_argument("--log-y", action="store_true", help="log-scale time axis")
    p.add_argument("--plot-stage", choices=("total", "singular_vectors"), default="total")
    p.add_argument("--seed", type=_u64, default=0)
    _add_tuning(p)
    return parser


def cmd_noise(args) -> int:
    image = load_pgm(args.input)
    spec = calibrate_sigma(image, args.zeta, tolerance=args.tolerance, seed=args.seed)
    noisy = contaminate(image, spec)
    save_pgm(noisy, args.output)
    print(f"zeta={relative_noise(image, noisy):.4f} sigma={spec.sigma:.4f}")
    # 8-bit rounding shifts the level of the file itself slightly
    written = GrayImage(quantize(noisy).astype(float))
    print(f"# 8-bit file zeta={relative_noise(image, written):.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_denoise(args) -> int:
    image = load_pgm(args.input)
    params = DenoiseParams(delta=args.delta, rho=args.rho, rank=args.rank, backend=args.backend,
                           backend_options=_options(args), geodesic_algorithm=args.geodesic,
                           seed=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        result = denoise_detailed(image, params)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    save_pgm(result.image, args.output)
    parts = [f"{k}_ms={1000 * result.timings[k]:.1f}" for k in STAGES if k in result.timings]
    parts.append(f"total_ms={1000 * result.timings['total']:.1f}")
    print(" ".join(parts))
    print(f"converged={'true' if result.converged else 'false'}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    print(evaluate(load_pgm(args.reference), load_pgm(args.test)).format())
    return EXIT_OK


def _sweep_images(args):
    out = []
    for ref in args.images:
        name, image = resolve_image(ref)
        if args.crop:
            if min(image.rows, image.cols) < args.crop:
                raise ValueError(f"{ref} is {image.rows}x{image.cols}, smaller than --crop {args.crop}")
            image = center_crop(image, args.crop)
            name = f"{name}{args.crop}"
        out.append((name, image))
    return out


def cmd_sweep(args) -> int:
    grids = {}
    for z in args.zeta:
        base = DEFAULT_GRIDS.get(float(z))
        if base is None and None in (args.delta, args.rho, args.rank):
            raise ValueError(f"no default grid for zeta={z:g}; give --delta, --rho and --rank")
        base = base or ((), (), ())
        grids[float(z)] = (tuple(args.delta or base[0]), tuple(args.rho or base[1]),
                           tuple(args.rank or base[2]))
    plan = SweepPlan(grids=grids, backends=tuple(args.backends),
                     repetitions=args.repetitions, base_seed=args.seed)
    images = _sweep_images(args)
    sink = CsvSink(args.csv) if args.csv else None
    records = run_sweep(images, plan, sink=sink, cache_dir=args.cache_dir, opts=_options(args),
                        geodesic=args.geodesic, noise_tolerance=args.noise_tolerance)
    failed = sum(r.failed for r in records)
    if failed:
        print(f"# {failed} of {len(records)} runs failed", file=sys.stderr)
    for metric in ("psnr", "ssim"):
        for rec in best_rows(records, metric).values():
            print(summary_line(rec, metric))
    return EXIT_OK


def cmd_timing(args) -> int:
    name, image = resolve_image(args.image)
    results = run_timing(image, name, args.sizes, args.delta, args.rho, args.rank,
                         backends=args.backends, repetitions=args.repetitions, zeta=args.zeta,
                         base_seed=args.seed, opts=_options(args), geodesic=args.geodesic)
    if args.csv:
        CsvSink(args.csv).append(r.record for r in results)
    if args.svg:
        series = {}
        for r in results:
            ms = r.record.wall_ms if args.plot_stage == "total" else r.stage_ms["singular_vectors"]
            series.setdefault(r.record.backend, []).append((r.size, ms / 1000.0))
        what = "denoising" if args.plot_stage == "total" else "singular-vector stage"
        svg = line_chart(series, title=f"{name}: {what} time", xlabel="n (image is n x n)",
                         ylabel="seconds", log_y=args.log_y)
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return EXIT_OK


COMMANDS = {"noise": cmd_noise, "denoise": cmd_denoise, "metrics": cmd_metrics,
            "sweep": cmd_sweep, "timing": cmd_timing}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, OSError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
