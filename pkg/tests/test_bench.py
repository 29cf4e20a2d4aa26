import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ggd.bench import (DEFAULT_GRIDS, BenchRecord, CsvSink, SweepPlan, base_from_run, best_rows,
                       line_chart, make_noisy, noise_seed, read_records, run_seed, run_sweep,
                       run_timing)
from ggd.bench.cli import main
from ggd.bench.records import CSV_FIELDS, from_row, to_row
from ggd.datasets import BUILTIN_IMAGES, load_builtin, resolve_image
from ggd.imagecore import GrayImage, center_crop, load_pgm, save_pgm

SVG = "{http://www.w3.org/2000/svg}"


def _rec(**kw):
    base = dict(image_name="x", zeta=20.0, backend="exact", delta=8, rho=3, rank=15, re=0.1,
                psnr=20.0, ssim=0.5, wall_ms=12.5, seed=7, converged=True)
    base.update(kw)
    return BenchRecord(**base)


# ---------------------------------------------------------------- records

def test_csv_header_and_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    recs = [_rec(), _rec(psnr=math.inf, re=0.0, ssim=1.0),
            _rec(re=None, psnr=None, ssim=None, wall_ms=None, converged=False)]
    sink = CsvSink(path)
    sink.append(recs[:1])
    sink.append(recs[1:])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert sum(line.startswith("image_name") for line in lines) == 1
    assert ",inf," in lines[2]
    assert lines[3].split(",")[6:10] == ["", "", "", ""]
    assert lines[3].endswith(",false")
    assert read_records(path) == recs


def test_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        CsvSink(path).append([_rec()])


def test_row_reconstructs_record():
    r = _rec(seed=2**64 - 1, zeta=30.0)
    assert from_row(dict(zip(CSV_FIELDS, to_row(r)))) == r


def test_best_rows_selection():
    recs = [_rec(psnr=20.0, ssim=0.7), _rec(psnr=22.0, ssim=0.6), _rec(psnr=21.0, ssim=0.8),
            _rec(psnr=None, re=None, ssim=None, converged=False),
            _rec(backend="rsvd", psnr=10.0, ssim=0.1)]
    by_psnr = best_rows(recs, "psnr")
    by_ssim = best_rows(recs, "ssim")
    assert by_psnr["x", 20.0, "exact"].psnr == 22.0
    assert by_ssim["x", 20.0, "exact"].ssim == 0.8
    assert by_psnr["x", 20.0, "rsvd"].psnr == 10.0
    for key, best in by_psnr.items():
        group = [r for r in recs if (r.image_name, r.zeta, r.backend) == key and not r.failed]
        assert best.psnr == max(r.psnr for r in group)
    with pytest.raises(ValueError):
        best_rows(recs, "re")


# ---------------------------------------------------------------- plan and seeds

def test_default_grids():
    assert DEFAULT_GRIDS[20.0] == ((8, 10, 12), (3, 5, 7), (15, 20, 25))
    assert DEFAULT_GRIDS[30.0] == ((10, 12, 14), (5, 7, 9), (15, 20, 25))
    assert DEFAULT_GRIDS[40.0] == ((12, 14, 16), (7, 9, 11), (15, 20, 25))
    plan = SweepPlan()
    assert sorted(plan.grids) == [20.0, 30.0, 40.0]
    assert len(list(plan.cells(20.0))) == 27


def test_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan(backends=("exact", "svd"))
    with pytest.raises(ValueError):
        SweepPlan(repetitions=0)
    with pytest.raises(ValueError):
        SweepPlan(grids={20.0: ((8,), (4,), (15,))})
    with pytest.raises(ValueError):
        SweepPlan.for_levels([25])
    assert SweepPlan.for_levels([30]).grids == {30.0: DEFAULT_GRIDS[30.0]}


def test_seed_derivation():
    s = run_seed(5, "barbara", 20, "alb", 10, 5, 20)
    assert s == run_seed(5, "barbara", 20.0, "alb", 10, 5, 20)
    assert s != run_seed(5, "barbara", 20, "alb", 10, 5, 25)
    assert s != run_seed(6, "barbara", 20, "alb", 10, 5, 20)
    assert 0 <= s < 2**64
    assert base_from_run(s, "barbara", 20, "alb", 10, 5, 20) == 5
    assert noise_seed(5, "barbara", 20) != noise_seed(5, "barbara", 30)


# ---------------------------------------------------------------- svg

def test_line_chart_structure():
    svg = line_chart({"a": [(50, 1.0), (60, 2.0)], "b": [(50, 0.01), (60, 0.02)]},
                     title="t", xlabel="n", ylabel="s", log_y=True)
    root = ET.fromstring(svg)
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 2
    for pl in lines:
        pts = [tuple(map(float, p.split(","))) for p in pl.get("points").split()]
        assert len(pts) == 2
        assert all(0 <= x <= 640 and 0 <= y <= 420 for x, y in pts)
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "a" in texts and "b" in texts and "1e-2" in texts


def test_line_chart_log_spacing_is_uniform():
    svg = line_chart({"a": [(1, 1.0), (2, 10.0), (3, 100.0)]}, log_y=True)
    pl = ET.fromstring(svg).find(f"{SVG}polyline")
    ys = [float(p.split(",")[1]) for p in pl.get("points").split()]
    assert ys[0] - ys[1] == pytest.approx(ys[1] - ys[2], abs=0.11)


def test_line_chart_needs_data():
    with pytest.raises(ValueError):
        line_chart({"a": []})


# ---------------------------------------------------------------- datasets

def test_bundled_images():
    for name in BUILTIN_IMAGES:
        img = load_builtin(name)
        assert img.shape == (256, 256)
        assert 0 <= img.pixels.min() and img.pixels.max() <= 255
        assert img.pixels.std() > 20
    with pytest.raises(ValueError):
        load_builtin("lena")


def test_resolve_image(tmp_path):
    assert resolve_image("mandrill")[0] == "mandrill"
    p = tmp_path / "pic.pgm"
    save_pgm(GrayImage(np.ones((3, 3))), p)
    name, img = resolve_image(str(p))
    assert name == "pic" and img.shape == (3, 3)
    with pytest.raises(FileNotFoundError):
        resolve_image(str(tmp_path / "missing.pgm"))


# ---------------------------------------------------------------- sweep and timing

def _tiny(size=16):
    return center_crop(load_builtin("barbara"), size)


def test_noisy_image_cached_and_shared(tmp_path):
    clean = _tiny()
    a = make_noisy(clean, "b", 20.0, 3, cache_dir=str(tmp_path))
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    b = make_noisy(clean, "b", 20.0, 3, cache_dir=str(tmp_path))
    assert a.image == b.image == load_pgm(files[0])
    assert np.array_equal(a.image.pixels, np.round(a.image.pixels))
    assert 19.5 <= a.zeta <= 20.5


def test_sweep_default_grid_cardinality(tmp_path):
    plan = SweepPlan.for_levels([20])
    sink = CsvSink(tmp_path / "s.csv")
    recs = run_sweep([("b16", _tiny())], plan, sink=sink, cache_dir=str(tmp_path / "c"),
                     log=lambda *_: None)
    assert len(recs) == 27 and len(read_records(tmp_path / "s.csv")) == 27
    assert {r.params() for r in recs} == set(plan.cells(20.0))
    for r in recs:
        assert r.seed == run_seed(0, "b16", 20.0, "exact", r.delta, r.rho, r.rank)
    again = run_sweep([("b16", _tiny())], plan, cache_dir=str(tmp_path / "c"), log=lambda *_: None)
    assert [(r.psnr, r.ssim) for r in again] == [(r.psnr, r.ssim) for r in recs]


def test_sweep_truncated_exact_matches_direct_run(tmp_path):
    from ggd.pipeline import DenoiseParams, denoise
    from ggd.metrics import psnr
    clean = _tiny()
    plan = SweepPlan(grids={20.0: ((8,), (3,), (4, 9))})
    recs = run_sweep([("b", clean)], plan, cache_dir=str(tmp_path), log=lambda *_: None)
    noisy = make_noisy(clean, "b", 20.0, 0, cache_dir=str(tmp_path)).image
    for r in recs:
        direct = denoise(noisy, DenoiseParams(delta=8, rho=3, rank=r.rank))
        assert r.psnr == pytest.approx(psnr(clean, direct), abs=1e-9)


def test_sweep_records_failures_and_continues(tmp_path):
    img = GrayImage(np.where(np.arange(144).reshape(12, 12) % 12 < 6, 10.0, 240.0))
    plan = SweepPlan(grids={20.0: ((1, 30), (3,), (4,))}, backends=("exact", "rsvd"))
    recs = run_sweep([("bars", img)], plan, log=lambda *_: None)
    assert len(recs) == 4
    failed = [r for r in recs if r.failed]
    assert failed and all(r.delta == 1 and not r.converged and r.wall_ms is None for r in failed)
    assert any(not r.failed for r in recs)


def test_timing_rows_and_stages():
    clean = _tiny(24)
    out = run_timing(clean, "b", [12, 16], delta=6, rho=3, rank=4,
                     backends=("exact", "rsvd"), repetitions=1, log=lambda *_: None)
    assert [(r.size, r.record.backend) for r in out] == [(12, "exact"), (12, "rsvd"),
                                                        (16, "exact"), (16, "rsvd")]
    for r in out:
        assert r.stage_ms["singular_vectors"] >= 0 and r.record.wall_ms > 0
    twice = run_timing(clean, "b", [12, 16], delta=6, rho=3, rank=4,
                       backends=("exact", "rsvd"), repetitions=2, log=lambda *_: None)
    assert len(twice) == len(out)
    assert [r.record.psnr for r in twice] == [r.record.psnr for r in out]
    with pytest.raises(ValueError):
        run_timing(clean, "b", [32], log=lambda *_: None)


# ---------------------------------------------------------------- CLI

@pytest.fixture
def images(tmp_path):
    clean = center_crop(load_builtin("cameraman"), 20)
    save_pgm(clean, tmp_path / "clean.pgm")
    save_pgm(GrayImage(np.full((10, 10), 42.0)), tmp_path / "flat.pgm")
    return tmp_path


def test_cli_noise(images, capsys):
    d = images
    assert main(["noise", str(d / "clean.pgm"), str(d / "n1.pgm"), "--zeta", "20", "--seed", "4"]) == 0
    out = capsys.readouterr().out.strip()
    zeta = float(out.split()[0].split("=")[1])
    assert out.startswith("zeta=") and " sigma=" in out and 19.5 <= zeta <= 20.5
    main(["noise", str(d / "clean.pgm"), str(d / "n2.pgm"), "--zeta", "20", "--seed", "4"])
    assert (d / "n1.pgm").read_bytes() == (d / "n2.pgm").read_bytes()
    # a mid-tone image saturates well below 99.9% once clamped
    save_pgm(center_crop(load_builtin("barbara"), 32), d / "mid.pgm")
    assert main(["noise", str(d / "mid.pgm"), str(d / "n3.pgm"), "--zeta", "99.9"]) == 2
    assert "unreachable" in capsys.readouterr().err


def test_cli_metrics(images, capsys):
    d = images
    main(["metrics", str(d / "clean.pgm"), str(d / "clean.pgm")])
    assert capsys.readouterr().out.strip() == "re=0.0000 psnr=inf ssim=1.0000"
    save_pgm(GrayImage(np.zeros((20, 20))), d / "zero.pgm")
    main(["metrics", str(d / "clean.pgm"), str(d / "zero.pgm")])
    assert capsys.readouterr().out.startswith("re=1.0000 ")
    ref = GrayImage(np.full((8, 8), 100.0))
    save_pgm(ref, d / "ref.pgm")
    # +25.5 lands on .5 and rounds away from zero when written; use a half-step file pair
    save_pgm(GrayImage(np.full((8, 8), 100.0 + 25.0)), d / "shift.pgm")
    main(["metrics", str(d / "ref.pgm"), str(d / "shift.pgm")])
    out = capsys.readouterr().out
    assert f"psnr={20 * math.log10(255 / 25):.2f}" in out


def test_cli_denoise(images, capsys):
    d = images
    assert main(["denoise", str(d / "flat.pgm"), str(d / "flat_out.pgm"), "--delta", "4",
                 "--rho", "3", "--rank", "4"]) == 0
    assert (d / "flat.pgm").read_bytes() == (d / "flat_out.pgm").read_bytes()
    out = capsys.readouterr().out
    assert "singular_vectors_ms=" in out and "total_ms=" in out
    main(["noise", str(d / "clean.pgm"), str(d / "noisy.pgm"), "--zeta", "20"])
    for backend in ("exact", "rsvd"):
        assert main(["denoise", str(d / "noisy.pgm"), str(d / f"{backend}.pgm"), "--backend", backend,
                     "--rank", "10", "--oversampling", "5", "--power-iters", "1"]) == 0
    capsys.readouterr()
    from ggd.metrics import psnr
    clean = load_pgm(d / "clean.pgm")
    gap = psnr(clean, load_pgm(d / "exact.pgm")) - psnr(clean, load_pgm(d / "rsvd.pgm"))
    assert abs(gap) < 0.5


def test_cli_denoise_nonconvergence_still_writes(images, capsys):
    d = images
    main(["noise", str(d / "clean.pgm"), str(d / "noisy.pgm"), "--zeta", "20"])
    rc = main(["denoise", str(d / "noisy.pgm"), str(d / "o.pgm"), "--backend", "alb", "--rank", "6",
               "--lanczos-steps", "8", "--max-iters", "1", "--tol", "1e-14"])
    assert rc == 0 and (d / "o.pgm").exists()
    assert "warning:" in capsys.readouterr().err


@pytest.mark.parametrize("argv, code", [
    (["denoise", "a.pgm", "b.pgm", "--rho", "4"], 1),
    (["denoise", "a.pgm", "b.pgm", "--backend", "svd"], 1),
    (["denoise", "a.pgm", "b.pgm", "--seed", "-1"], 1),
    (["frobnicate"], 1),
    ([], 1),
])
def test_cli_usage_errors(argv, code, capsys):
    assert main(argv) == code


def test_cli_runtime_errors(images, capsys):
    d = images
    rc = main(["denoise", str(d / "clean.pgm"), str(d / "o.pgm"), "--delta", "1", "--rank", "3"])
    err = capsys.readouterr().err
    assert rc == 2 and "increase delta" in err
    assert main(["denoise", str(d / "missing.pgm"), str(d / "o.pgm")]) == 2
    (d / "bad.pgm").write_bytes(b"P5\n2 2\n999\n" + bytes(8))
    assert main(["metrics", str(d / "bad.pgm"), str(d / "bad.pgm")]) == 1


def test_cli_sweep_default_grid(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    rc = main(["sweep", "barbara", "--crop", "16", "--zeta", "20", "--backend", "exact",
               "--csv", str(csv_path), "--cache-dir", str(tmp_path / "cache")])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert sum(line.startswith("best-psnr") for line in out) == 1
    assert sum(line.startswith("best-ssim") for line in out) == 1
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 27
    best = max(rows, key=lambda r: float(r["psnr"]))
    line = next(l for l in out if l.startswith("best-psnr"))
    assert f"delta={best['delta']} rho={best['rho']} rank={best['rank']}" in line


def test_cli_timing_outputs(tmp_path, capsys):
    rc = main(["timing", "mandrill", "--sizes", "10,12", "--delta", "5", "--rho", "3", "--rank", "3",
               "--backend", "exact,mcla,alb,pime,rsvd", "--repetitions", "1",
               "--csv", str(tmp_path / "t.csv"), "--svg", str(tmp_path / "t.svg"), "--log-y"])
    assert rc == 0
    assert len(read_records(tmp_path / "t.csv")) == 10
    root = ET.fromstring((tmp_path / "t.svg").read_text())
    assert len(root.findall(f"{SVG}polyline")) == 5
    assert main(["timing", "mandrill", "--sizes", "300"]) == 1
