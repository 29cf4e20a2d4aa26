"""Parameter-grid sweeps and backend timing runs."""

from __future__ import annotations

import hashlib
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from ..imagecore import GrayImage, center_crop, load_pgm, quantize, save_pgm
from ..lowrank import BackendError, BackendOptions
from ..metrics import evaluate
from ..noise import NoiseSpec, calibrate_sigma, contaminate, relative_noise
from ..patchgraph import DisconnectedGraphError
from ..pipeline import build_gramian, reconstruct, top_triplets
from .plan import SweepPlan, noise_seed, run_seed
from .records import BenchRecord, CsvSink

RUN_ERRORS = (BackendError, DisconnectedGraphError, ValueError, np.linalg.LinAlgError)


@dataclass
class NoisyImage:
    image: GrayImage
    spec: NoiseSpec
    zeta: float


def make_noisy(clean: GrayImage, name: str, zeta: float, base_seed: int = 0,
               tolerance: float = 0.5, cache_dir: str | None = None) -> NoisyImage:
    """The single 8-bit noisy realisation for (image, zeta), optionally cached on disk."""
    seed = noise_seed(base_seed, name, zeta)
    path = None
    if cache_dir is not None:
        digest = hashlib.sha256(quantize(clean).tobytes()).hexdigest()[:12]
        path = os.path.join(cache_dir, f"{name}_{clean.rows}x{clean.cols}_{digest}"
                                       f"_z{zeta:g}_t{tolerance:g}_{seed:016x}.pgm")
    spec = calibrate_sigma(clean, zeta, tolerance=tolerance, seed=seed)
    if path is not None and os.path.exists(path):
        noisy = load_pgm(path)
    else:
        noisy = GrayImage(quantize(contaminate(clean, spec)).astype(np.float64))
        if path is not None:
            os.makedirs(cache_dir, exist_ok=True)
            save_pgm(noisy, path)
    return NoisyImage(noisy, spec, relative_noise(clean, noisy))


def _median_ms(samples) -> float:
    return 1000.0 * statistics.median(samples)


def _failed(name, zeta, backend, d, r, L, seed) -> BenchRecord:
    return BenchRecord(name, zeta, backend, d, r, L, None, None, None, None, seed, False)


def run_sweep(images, plan: SweepPlan, sink: CsvSink | None = None, cache_dir: str | None = None,
              opts: BackendOptions | None = None, geodesic: str = "dijkstra_all",
              noise_tolerance: float = 0.5, log=print) -> list[BenchRecord]:
    """Run every (image, zeta, delta, rho, backend, L) cell of ``plan``.

    ``images`` is a sequence of (name, clean image).  The Gramian is built
    once per (image, zeta, delta, rho) and the exact decomposition once per
    Gramian at the largest requested rank; each record's ``wall_ms`` counts
    the shared stages at their measured cost.
    """
    opts = opts or BackendOptions()
    out: list[BenchRecord] = []
    for name, clean in images:
        for zeta in plan.grids:
            noisy = make_noisy(clean, name, zeta, plan.base_seed, noise_tolerance, cache_dir)
            log(f"# {name} zeta={zeta:g}: sigma={noisy.spec.sigma:.4f} "
                f"achieved zeta={noisy.zeta:.3f}")
            deltas, rhos, ranks = plan.grids[zeta]
            for d in deltas:
                for r in rhos:
                    recs = _run_gramian_cell(name, clean, noisy.image, zeta, d, r, ranks,
                                             plan, opts, geodesic)
                    if sink is not None:
                        sink.append(recs)
                    out.extend(recs)
    return out


def _run_gramian_cell(name, clean, noisy, zeta, d, r, ranks, plan, opts, geodesic):
    seeds = {(b, L): run_seed(plan.base_seed, name, zeta, b, d, r, L)
             for b in plan.backends for L in ranks}
    try:
        stage = {}
        patches, gram = build_gramian(noisy, d, r, geodesic, stage)
        for L in ranks:
            if L > gram.n:
                raise ValueError(f"rank {L} exceeds {gram.n} pixels")
    except RUN_ERRORS:
        return [_failed(name, zeta, b, d, r, L, seeds[b, L]) for b in plan.backends for L in ranks]
    shared = sum(stage.values())
    recs = []
    for backend in plan.backends:
        cached = None
        cached_time = 0.0
        if backend == "exact":
            try:
                samples = []
                for _ in range(plan.repetitions):
                    t = time.perf_counter()
                    cached = top_triplets(gram, max(ranks), "exact", opts)
                    samples.append(time.perf_counter() - t)
                cached_time = statistics.median(samples)
            except RUN_ERRORS:
                recs.extend(_failed(name, zeta, backend, d, r, L, seeds[backend, L]) for L in ranks)
                continue
        for L in ranks:
            seed = seeds[backend, L]
            try:
                samples = []
                for _ in range(plan.repetitions):
                    t = time.perf_counter()
                    if cached is not None:
                        trip = cached.truncate(L)
                    else:
                        trip = top_triplets(gram, L, backend, opts.with_(seed=seed))
                    image = reconstruct(patches, trip.right_vectors)
                    samples.append(time.perf_counter() - t + cached_time)
            except RUN_ERRORS:
                recs.append(_failed(name, zeta, backend, d, r, L, seed))
                continue
            m = evaluate(clean, image)
            recs.append(BenchRecord(name, zeta, backend, d, r, L, m.re, m.psnr, m.ssim,
                                    1000.0 * shared + _median_ms(samples), seed,
                                    trip.converged))
    return recs


def _warm_up(clean, delta, rho, rank, backends, opts, geodesic):
    # load compiled kernels so the first timed size does not pay for it
    side = max(rho + 1, int(np.ceil(np.sqrt(max(delta + 2, 2 * rank + 8)))))
    crop = center_crop(clean, min(side, clean.rows, clean.cols))
    try:
        patches, gram = build_gramian(crop, delta, rho, geodesic)
        for b in backends:
            reconstruct(patches, top_triplets(gram, min(rank, gram.n // 3), b, opts).right_vectors)
    except RUN_ERRORS:
        pass


@dataclass
class TimingResult:
    size: int
    record: BenchRecord
    stage_ms: dict = field(default_factory=dict)


def run_timing(clean: GrayImage, name: str, sizes, delta: int = 10, rho: int = 5, rank: int = 15,
               backends=("exact", "mcla", "alb", "pime", "rsvd"), repetitions: int = 3,
               zeta: float = 20.0, base_seed: int = 0, opts: BackendOptions | None = None,
               geodesic: str = "dijkstra_all", log=print) -> list[TimingResult]:
    """Median denoising time per (size, backend) on centre crops of ``clean``.

    Runs strictly sequentially.  The backend-independent stages (patches,
    graph, geodesics, Gramian) are built and timed once per size; the
    singular-vector and reconstruction stages are repeated per backend.
    """
    opts = opts or BackendOptions()
    sizes = [int(s) for s in sizes]
    if max(sizes) > min(clean.rows, clean.cols):
        raise ValueError(f"image {name} is {clean.rows}x{clean.cols}, smaller than "
                         f"the requested size {max(sizes)}")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    _warm_up(clean, delta, rho, rank, backends, opts, geodesic)
    results = []
    for n in sizes:
        crop = center_crop(clean, n)
        noisy = make_noisy(crop, name, zeta, base_seed)
        stage = {}
        patches, gram = build_gramian(noisy.image, delta, rho, geodesic, stage)
        shared_ms = 1000.0 * sum(stage.values())
        for backend in backends:
            seed = run_seed(base_seed, name, zeta, backend, delta, rho, rank)
            sv, rc = [], []
            for _ in range(repetitions):
                t = time.perf_counter()
                trip = top_triplets(gram, rank, backend, opts.with_(seed=seed))
                t1 = time.perf_counter()
                image = reconstruct(patches, trip.right_vectors)
                t2 = time.perf_counter()
                sv.append(t1 - t)
                rc.append(t2 - t1)
            m = evaluate(crop, image)
            stage_ms = {k: 1000.0 * v for k, v in stage.items()}
            stage_ms["singular_vectors"] = _median_ms(sv)
            stage_ms["reconstruct"] = _median_ms(rc)
            total = shared_ms + _median_ms([a + b for a, b in zip(sv, rc)])
            rec = BenchRecord(f"{name}@{n}", zeta, backend, delta, rho, rank, m.re, m.psnr,
                              m.ssim, total, seed, trip.converged)
            log(f"n={n} backend={backend} wall_ms={total:.1f} "
                f"singular_vectors_ms={stage_ms['singular_vectors']:.1f} psnr={m.psnr:.2f}")
            results.append(TimingResult(n, rec, stage_ms))
        del gram
    return results
