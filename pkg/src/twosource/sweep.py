"""Parameter sweeps with a stable tabular output."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path

from .config import ApertureSpec, SweepConfig, validate
from .errors import ConfigError, TwoSourceError
from .loss import gaussian_psf, gram_bound
from .measurement import direct_imaging_fi, spade_fi
from .optics import SourcePair
from .qfi import QUANTITIES, qfi_point_sources
from .svg import write_plot

WORKERS_ENV = "TWOSOURCE_WORKERS"

UNITS = {
    "f_em_full": "F/delta [1/length^3]",
    "f_em_single": "F/delta [1/length^3]",
    "spade_fi": "F/delta [1/length^3]",
    "direct_fi": "F/delta [1/length^3]",
    "f_det_full": "1/length^2",
    "f_det_single": "1/length^2",
    "transmission": "p/delta [1/length]",
    "gram_bound": "probability",
}
FIG2_GAMMAS = (-1.0, -0.98, -0.5, 0.0, 0.5, 1.0)
FIG2_DELTA = 1e-4
FIG2_PANELS = (("a", "f_em_full", 3, "delta/sigma^3"), ("b", "f_det_full", 2, "1/sigma^2"),
               ("c", "f_em_single", 3, "delta/sigma^3"), ("d", "f_det_single", 2, "1/sigma^2"))


@dataclass(frozen=True)
class Record:
    quantity: str
    re_gamma: float
    im_gamma: float
    s_over_sigma: float
    sigma: float
    delta: float
    value: float
    units: str
    convention: str
    reason: str = ""

    @property
    def failed(self) -> bool:
        return self.reason.startswith("error")


COLUMNS = tuple(f.name for f in fields(Record))


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError({WORKERS_ENV: f"not an integer: {raw!r}"}) from None
    if n < 1:
        raise ConfigError({WORKERS_ENV: "must be >= 1"})
    return n


def _evaluate_point(task):
    """All requested quantities at one (gamma, s); returns {quantity: (value, reason)}."""
    cfg, re_g, im_g, s_over = task
    ap = cfg.aperture.build()
    sigma = ap.psf_width
    s = s_over * sigma
    gamma = complex(re_g, im_g)
    out = {}
    qfi_wanted = [q for q in cfg.quantities if q in QUANTITIES or q == "transmission"]
    if qfi_wanted:
        try:
            rep = qfi_point_sources(ap, s, gamma, convention=cfg.convention, on_divergence="sentinel")
            reason = f"divergent: {rep.diagnostic}" if rep.diagnostic else ""
            for q in qfi_wanted:
                v = rep.transmission if q == "transmission" else getattr(rep, q)
                out[q] = (v, reason if not math.isfinite(v) else "")
        except TwoSourceError as exc:
            for q in qfi_wanted:
                out[q] = (math.nan, f"error: {type(exc).__name__}: {exc}")
    for q, fn in (("spade_fi", spade_fi), ("direct_fi", direct_imaging_fi)):
        if q not in cfg.quantities:
            continue
        try:
            src = SourcePair(s, cfg.delta, gamma)
            out[q] = (fn(ap, src, convention=cfg.convention) / cfg.delta, "")
        except TwoSourceError as exc:
            out[q] = (math.nan, f"error: {type(exc).__name__}: {exc}")
    if "gram_bound" in cfg.quantities:
        try:
            if ap.kind != "gaussian":
                raise ConfigError({"sweep.quantities": "gram_bound needs a Gaussian aperture"})
            out["gram_bound"] = (gram_bound(gaussian_psf(sigma), cfg.modes, cfg.delta, sigma=sigma).bound, "")
        except TwoSourceError as exc:
            out["gram_bound"] = (math.nan, f"error: {type(exc).__name__}: {exc}")
    return out


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list:
    """Records ordered by (quantity, Re gamma, Im gamma, s), independent of scheduling."""
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    sigma = cfg.aperture.build().psf_width
    gammas = [(r, i) for r in cfg.re_gamma_list for i in cfg.im_gamma_list]
    tasks = [(cfg, r, i, s) for r, i in gammas for s in cfg.s_grid]
    n = worker_count() if workers is None else workers
    if n > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_evaluate_point, tasks, chunksize=max(1, len(tasks) // (4 * n))))
    else:
        results = [_evaluate_point(t) for t in tasks]
    records = []
    for q in cfg.quantities:
        for (_, r, i, s), res in zip(tasks, results):
            value, reason = res[q]
            records.append(Record(q, r, i, s, sigma, cfg.delta, float(value), UNITS[q],
                                  cfg.convention, reason))
    return records


# serialisation -------------------------------------------------------------

def format_float(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow(format_float(v) if isinstance(v, float) else v for v in astuple(r))
    return buf.getvalue()


# json.dumps writes the shortest round-trip repr; the schema wants 17 significant digits
def _json_value(v) -> str:
    if isinstance(v, float):
        f = format_float(v)
        return f if math.isfinite(v) else f'"{f}"'
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_json(records) -> str:
    rows = ["  {" + ", ".join(f'"{k}": {_json_value(v)}' for k, v in zip(COLUMNS, astuple(r))) + "}"
            for r in records]
    return "[\n" + ",\n".join(rows) + "\n]\n"


def serialize(records, fmt: str) -> str:
    return to_json(records) if fmt == "json" else to_csv(records)


def read_csv(path) -> list:
    """Parse a file written by :func:`to_csv` back into records."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        kw = {k: (float(row[k]) if k in ("re_gamma", "im_gamma", "s_over_sigma", "sigma", "delta", "value")
                  else row[k]) for k in COLUMNS}
        out.append(Record(**kw))
    return out


def plot_records(records, path, quantity: str, **kw) -> Path:
    series = {}
    for r in records:
        if r.quantity != quantity:
            continue
        label = f"Re g={r.re_gamma:g}" + (f", Im g={r.im_gamma:g}" if r.im_gamma else "")
        xs, ys = series.setdefault(label, ([], []))
        xs.append(r.s_over_sigma)
        ys.append(r.value)
    return write_plot(path, series, **kw)


# figure reproduction ----------------------------------------------------------

def fig2_grid() -> tuple:
    return (0.01,) + tuple(round(0.05 * k, 10) for k in range(1, 101))


def reproduce_fig2(sigma: float, out_dir, svg: bool = False, workers: int | None = None) -> list:
    """Four QFI panels (plus SPADE FI for panel a) in normalised units.

    Per-emitted panels are reported in delta/sigma^3 and per-detected ones
    in 1/sigma^2, so the files do not depend on sigma beyond round-off.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = SweepConfig(aperture=ApertureSpec("gaussian", sigma=float(sigma)), s_grid=fig2_grid(),
                      re_gamma_list=FIG2_GAMMAS, im_gamma_list=(0.0,), delta=FIG2_DELTA * sigma,
                      quantities=tuple(q for _, q, _, _ in FIG2_PANELS) + ("spade_fi",))
    records = run_sweep(cfg, workers)
    written = []
    panels = FIG2_PANELS + (("a", "spade_fi", 3, "delta/sigma^3"),)
    for tag, q, power, units in panels:
        rows = [replace(r, value=r.value * sigma ** power, units=units)
                for r in records if r.quantity == q]
        path = out_dir / f"fig2_{tag}_{q}.csv"
        path.write_text(to_csv(rows))
        written.append(path)
        if svg:
            written.append(plot_records(rows, path.with_suffix(".svg"), q,
                                        title=f"({tag}) {q}", xlabel="s / sigma",
                                        ylabel=units, log_y=q.startswith("f_det")))
    return written
