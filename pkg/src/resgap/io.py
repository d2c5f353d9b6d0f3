"""JSON, CSV and PGM serialisation of the domain types."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bands import BandSweep, StudyTable
from .errors import ValidationError
from .raster import SOLID, RasterCell

BANDS_COLUMNS = ["theta_x", "theta_y", "k", "lambda", "residual"]
GAPS_COLUMNS = ["k", "gap_lo", "gap_hi", "limit_alpha", "limit_beta", "rel_dev"]
STUDY_COLUMNS = [
    "epsilon", "passage_cells", "k", "lambda_D", "lambda_N_next", "gap_lo", "gap_hi",
    "limit_alpha", "limit_beta", "dev_alpha_D", "dev_beta_N", "dev_gap_lo", "dev_gap_hi",
]


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                              f"{exc.msg}") from exc
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path, data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(data), indent=2) + "\n")
    return path


def write_bands_csv(path, sweep: BandSweep) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BANDS_COLUMNS)
        for s in sweep.slices:
            tx, ty = s.bc.theta
            for k, (lam, res) in enumerate(zip(s.eigenvalues, s.residuals), 1):
                w.writerow([repr(tx), repr(ty), k, repr(float(lam)), f"{res:.3e}"])
    return path


def read_bands_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {"theta_x": float(r["theta_x"]), "theta_y": float(r["theta_y"]), "k": int(r["k"]),
             "lambda": float(r["lambda"]), "residual": float(r["residual"])}
            for r in csv.DictReader(fh)
        ]


def gap_rows(gaps, alphas=None, betas=None) -> list[list]:
    rows = []
    for k, (lo, hi) in enumerate(gaps, 1):
        if alphas is not None and k <= len(alphas):
            a, b = alphas[k - 1], betas[k - 1]
            dev = max(abs(lo - a) / a, abs(hi - b) / b)
            rows.append([k, lo, hi, a, b, dev])
        else:
            rows.append([k, lo, hi, "", "", ""])
    return rows


def write_gaps_csv(path, gaps, alphas=None, betas=None) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GAPS_COLUMNS)
        w.writerows(gap_rows(gaps, alphas, betas))
    return path


def write_study_csv(path, table: StudyTable) -> Path:
    path = Path(path)
    alphas, betas = table.targets.alphas_t, table.targets.betas_t
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STUDY_COLUMNS)
        for r in table.rows:
            cells = " ".join(str(c) for c in r.passage_cells)
            for k in range(table.targets.m):
                lo, hi = r.gaps[k] if len(r.gaps) == table.targets.m else ("", "")
                w.writerow([
                    r.epsilon, cells, k + 1, r.dirichlet[k], r.neumann[k + 1], lo, hi,
                    alphas[k], betas[k], r.dev_alpha_D[k], r.dev_beta_N[k],
                    r.dev_gap_lo[k], r.dev_gap_hi[k],
                ])
    return path


def write_pgm(path, cell: RasterCell) -> Path:
    """Binary PGM (P5) of the mask; fluid is white, row 0 of the file is y = 1."""
    path = Path(path)
    img = np.where(cell.labels == SOLID, 0, 255).astype(np.uint8)[::-1]
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValidationError(f"{path} is not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    pixels = np.frombuffer(parts[4][: w * h], dtype=np.uint8)
    return pixels.reshape(h, w)
