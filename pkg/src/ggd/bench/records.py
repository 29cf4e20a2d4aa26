"""Benchmark records and their CSV form."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import astuple, dataclass, fields

CSV_FIELDS = ("image_name", "zeta", "backend", "delta", "rho", "rank",
              "re", "psnr", "ssim", "wall_ms", "seed", "converged")


@dataclass(frozen=True)
class BenchRecord:
    image_name: str
    zeta: float
    backend: str
    delta: int
    rho: int
    rank: int
    re: float | None
    psnr: float | None
    ssim: float | None
    wall_ms: float | None
    seed: int
    converged: bool

    @property
    def failed(self) -> bool:
        return self.psnr is None

    def params(self) -> tuple[int, int, int]:
        return self.delta, self.rho, self.rank


assert tuple(f.name for f in fields(BenchRecord)) == CSV_FIELDS


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _opt_float(text: str) -> float | None:
    return None if text == "" else float(text)


def to_row(rec: BenchRecord) -> list[str]:
    return [_fmt(v) for v in astuple(rec)]


def from_row(row: dict) -> BenchRecord:
    return BenchRecord(
        image_name=row["image_name"],
        zeta=float(row["zeta"]),
        backend=row["backend"],
        delta=int(row["delta"]),
        rho=int(row["rho"]),
        rank=int(row["rank"]),
        re=_opt_float(row["re"]),
        psnr=_opt_float(row["psnr"]),
        ssim=_opt_float(row["ssim"]),
        wall_ms=_opt_float(row["wall_ms"]),
        seed=int(row["seed"]),
        converged=row["converged"] == "true",
    )


class CsvSink:
    """Appends records to a CSV file, writing the header only for a new or empty file."""

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)

    def append(self, records) -> None:
        records = list(records)
        new = not os.path.exists(self.path) or os.path.getsize(self.path) == 0
        if not new:
            with open(self.path, newline="", encoding="utf-8") as fh:
                header = next(csv.reader(fh), None)
            if header is not None and tuple(header) != CSV_FIELDS:
                raise ValueError(f"{self.path} has a different header: {header}")
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(CSV_FIELDS)
            for rec in records:
                w.writerow(to_row(rec))


def read_records(path: str | os.PathLike) -> list[BenchRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [from_row(r) for r in csv.DictReader(fh)]


def best_rows(records, metric: str = "psnr") -> dict[tuple[str, float, str], BenchRecord]:
    """Best successful record per (image, zeta, backend) by ``metric`` (ties: first seen)."""
    if metric not in ("psnr", "ssim"):
        raise ValueError("metric must be 'psnr' or 'ssim'")
    best: dict[tuple[str, float, str], BenchRecord] = {}
    for rec in records:
        if rec.failed:
            continue
        key = (rec.image_name, rec.zeta, rec.backend)
        if key not in best or getattr(rec, metric) > getattr(best[key], metric):
            best[key] = rec
    return best


def summary_line(rec: BenchRecord, metric: str) -> str:
    return (f"best-{metric} image={rec.image_name} zeta={rec.zeta:g} backend={rec.backend} "
            f"delta={rec.delta} rho={rec.rho} rank={rec.rank} "
            f"psnr={rec.psnr:.2f} re={rec.re:.4f} ssim={rec.ssim:.4f}")
