"""CSV and plain-text matrix serialisation."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .montecarlo import SweepRow, SweepTable, d_opt_table, non_optimum_band
from .partition import BoundarySegment, RegionCensus

__all__ = [
    "SWEEP_HEADER",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_heatmaps",
    "write_d_opt_csv",
    "write_non_optimum_csv",
    "write_census_csv",
    "write_boundaries_csv",
    "read_matrix",
    "read_vector",
    "write_matrix",
]

SWEEP_HEADER = ("p", "d", "s", "mean_cost", "std_err", "multi_rate", "n_trials", "n_samples")


def _num(x) -> str:
    # repr gives the shortest string that round-trips
    return str(x) if isinstance(x, (int, np.integer)) else repr(float(x))


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    try:
        path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_sweep_csv(table: SweepTable, path) -> Path:
    rows = (
        [_num(r.p), _num(r.d), _num(r.s), _num(r.mean_cost), _num(r.std_err), _num(r.multi_rate),
         str(r.n_trials), str(r.n_samples)]
        for r in table.sorted()
    )
    return _write_rows(path, SWEEP_HEADER, rows)


def read_sweep_csv(path) -> SweepTable:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SWEEP_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(SWEEP_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(SWEEP_HEADER)} fields, got {len(rec)}")
            rows.append(SweepRow(*(float(x) for x in rec[:6]), int(rec[6]), int(rec[7])))
    return SweepTable(rows)


def heatmap_name(s: float) -> str:
    return f"heatmap_s{s:g}.csv"


def write_heatmaps(table: SweepTable, out_dir) -> list[Path]:
    """One long-format ``p,d,value`` file of mean costs per exponent."""
    out_dir = Path(out_dir)
    paths = []
    for s in table.values("s"):
        rows = ([_num(r.p), _num(r.d), _num(r.mean_cost)] for r in table.sorted() if r.s == s)
        paths.append(_write_rows(out_dir / heatmap_name(s), ("p", "d", "value"), rows))
    return paths


def write_d_opt_csv(table: SweepTable, path) -> Path:
    return _write_rows(path, ("p", "s", "d_opt"), ([_num(p), _num(s), _num(d)] for p, s, d in d_opt_table(table)))


def write_non_optimum_csv(table: SweepTable, path) -> Path:
    rows = ([_num(p), _num(d)] for p in table.values("p") for d in non_optimum_band(table, p))
    return _write_rows(path, ("p", "d"), rows)


def _bitstr(f) -> str:
    return "".join("1" if x else "0" for x in f)


def write_census_csv(c: RegionCensus, path) -> Path:
    total = sum(c.counts.values())
    items = sorted(c.counts.items(), key=lambda kv: (_bitstr(kv[0].lfp), _bitstr(kv[0].gfp)))
    rows = (
        [_bitstr(sig.lfp), _bitstr(sig.gfp), str(int(sig.is_multi)), str(n), _num(n / total)]
        for sig, n in items
    )
    return _write_rows(path, ("lfp", "gfp", "multi", "count", "fraction"), rows)


def write_boundaries_csv(segments: list[BoundarySegment], path) -> Path:
    rows = []
    for seg in segments:
        ends = list(seg.endpoints) + [("", "")] * (2 - len(seg.endpoints))
        rows.append([
            str(seg.bank), _bitstr(seg.context), _num(seg.normal[0]), _num(seg.normal[1]), _num(seg.offset),
            *(_num(x) if x != "" else "" for pt in ends for x in pt),
        ])
    return _write_rows(path, ("bank", "context", "a1", "a2", "offset", "x0", "y0", "x1", "y1"), rows)


def read_matrix(path) -> np.ndarray:
    """Whitespace-separated rows of decimals; ragged input is rejected."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append([float(x) for x in line.split()])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: ragged row ({len(rows[-1])} values, expected {len(rows[0])})")
    if not rows:
        raise ValueError(f"{path}: no data")
    return np.array(rows)


def read_vector(path) -> np.ndarray:
    """A single row or a single column of decimals."""
    m = read_matrix(path)
    if m.shape[0] != 1 and m.shape[1] != 1:
        raise ValueError(f"{path}: expected one row or one column, got shape {m.shape}")
    return m.ravel()


def write_matrix(m, path) -> Path:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    text = "".join(" ".join(_num(x) for x in row) + "\n" for row in m)
    Path(path).write_text(text, encoding="utf-8")
    return Path(path)
