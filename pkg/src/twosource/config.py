"""Flat ``dotted.key = value`` sweep configuration.

Example::

    aperture.kind = gaussian
    aperture.sigma = 1.0
    sweep.s_over_sigma = 0.5, 1, 2
    sweep.re_gamma = -0.5, 0, 0.5
    sweep.im_gamma = 0
    sweep.delta = 1e-4
    sweep.quantities = f_em_full, f_det_full
    sweep.convention = paper
    output.format = csv
    output.svg = false
    seed = 0

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .optics import CONVENTIONS, Aperture

QUANTITY_CHOICES = ("f_em_full", "f_det_full", "f_em_single", "f_det_single", "spade_fi",
                    "direct_fi", "transmission", "gram_bound")
APERTURE_KINDS = ("gaussian", "hard_edge", "mixture", "random_mixture", "file")

_KNOWN = {
    "aperture.kind", "aperture.sigma", "aperture.half_width", "aperture.weights",
    "aperture.sigmas", "aperture.components", "aperture.file",
    "sweep.s_over_sigma", "sweep.re_gamma", "sweep.im_gamma", "sweep.delta",
    "sweep.quantities", "sweep.convention", "loss.modes",
    "output.format", "output.svg", "seed",
}


@dataclass(frozen=True)
class ApertureSpec:
    """Picklable recipe for an :class:`Aperture` (workers rebuild it)."""

    kind: str = "gaussian"
    sigma: float = 1.0
    half_width: float = 1.0
    weights: tuple = ()
    sigmas: tuple = ()
    components: int = 3
    file: str = ""
    seed: int = 0

    def build(self) -> Aperture:
        if self.kind == "gaussian":
            return Aperture.gaussian(self.sigma)
        if self.kind == "hard_edge":
            return Aperture.hard_edge(self.half_width)
        if self.kind == "mixture":
            return Aperture.gaussian_mixture(self.weights, self.sigmas)
        if self.kind == "random_mixture":
            return Aperture.random_mixture(np.random.default_rng(self.seed), self.components)
        return Aperture.from_file(self.file)


@dataclass(frozen=True)
class SweepConfig:
    aperture: ApertureSpec = field(default_factory=ApertureSpec)
    s_grid: tuple = (1.0,)
    re_gamma_list: tuple = (0.0,)
    im_gamma_list: tuple = (0.0,)
    delta: float = 1e-4
    quantities: tuple = ("f_em_full",)
    convention: str = "paper"
    output: str = "csv"
    svg: bool = False
    seed: int = 0
    modes: int = 1000


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_pairs(text: str) -> dict:
    """``key = value`` lines to a dict; duplicate or malformed lines are errors."""
    out, problems = {}, {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems[f"line {n}"] = f"expected key = value, got {raw.strip()!r}"
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            problems[key] = f"duplicate key (line {n})"
        out[key] = value
    if problems:
        raise ConfigError(problems)
    return out


def config_from_pairs(pairs: dict, base_dir: Path | None = None) -> SweepConfig:
    problems = {}
    for key in pairs:
        if key not in _KNOWN:
            problems[key] = "unknown key"

    def get(key, conv, default):
        if key not in pairs:
            return default
        try:
            return conv(pairs[key])
        except (TypeError, ValueError) as exc:
            problems[key] = str(exc)
            return default

    seed = get("seed", int, 0)
    kind = get("aperture.kind", str.strip, "gaussian")
    if kind not in APERTURE_KINDS:
        problems["aperture.kind"] = f"must be one of {', '.join(APERTURE_KINDS)}"
    file = get("aperture.file", str.strip, "")
    if kind == "file":
        if not file:
            problems["aperture.file"] = "required when aperture.kind = file"
        elif base_dir is not None and not Path(file).is_absolute():
            file = str(base_dir / file)
    ap = ApertureSpec(
        kind=kind,
        sigma=get("aperture.sigma", float, 1.0),
        half_width=get("aperture.half_width", float, 1.0),
        weights=get("aperture.weights", _floats, ()),
        sigmas=get("aperture.sigmas", _floats, ()),
        components=get("aperture.components", int, 3),
        file=file,
        seed=seed,
    )
    quantities = get("sweep.quantities", lambda t: tuple(v.strip() for v in t.split(",") if v.strip()),
                     ("f_em_full",))
    cfg = SweepConfig(
        aperture=ap,
        s_grid=get("sweep.s_over_sigma", _floats, (1.0,)),
        re_gamma_list=get("sweep.re_gamma", _floats, (0.0,)),
        im_gamma_list=get("sweep.im_gamma", _floats, (0.0,)),
        delta=get("sweep.delta", float, 1e-4),
        quantities=quantities,
        convention=get("sweep.convention", str.strip, "paper"),
        output=get("output.format", str.strip, "csv"),
        svg=get("output.svg", _bool, False),
        seed=seed,
        modes=get("loss.modes", int, 1000),
    )
    problems.update(validate(cfg, check_aperture="aperture.kind" not in problems
                             and not any(k.startswith("aperture.") for k in problems)))
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg: SweepConfig, check_aperture: bool = True) -> dict:
    """Field-level problems with ``cfg`` (empty when valid)."""
    p = {}
    s = cfg.s_grid
    if not s:
        p["sweep.s_over_sigma"] = "must be nonempty"
    elif any(not math.isfinite(v) or v < 0 for v in s):
        p["sweep.s_over_sigma"] = "values must be finite and >= 0"
    elif any(b <= a for a, b in zip(s, s[1:])):
        p["sweep.s_over_sigma"] = "must be strictly increasing"
    if not cfg.re_gamma_list:
        p["sweep.re_gamma"] = "must be nonempty"
    if not cfg.im_gamma_list:
        p["sweep.im_gamma"] = "must be nonempty"
    bad = [(r, i) for r in cfg.re_gamma_list for i in cfg.im_gamma_list
           if not (math.isfinite(r) and math.isfinite(i)) or math.hypot(r, i) > 1 + 1e-12]
    if bad:
        p["sweep.re_gamma"] = f"|gamma| > 1 for (re, im) = {bad[0]}"
    if not (math.isfinite(cfg.delta) and 0 < cfg.delta):
        p["sweep.delta"] = "must be positive"
    unknown = [q for q in cfg.quantities if q not in QUANTITY_CHOICES]
    if not cfg.quantities:
        p["sweep.quantities"] = "must be nonempty"
    elif unknown:
        p["sweep.quantities"] = f"unknown {unknown}; choose from {', '.join(QUANTITY_CHOICES)}"
    elif len(set(cfg.quantities)) != len(cfg.quantities):
        p["sweep.quantities"] = "duplicates"
    if cfg.convention not in CONVENTIONS:
        p["sweep.convention"] = f"must be one of {', '.join(CONVENTIONS)}"
    if cfg.output not in ("csv", "json"):
        p["output.format"] = "must be csv or json"
    if cfg.modes < 1:
        p["loss.modes"] = "must be >= 1"

    if check_aperture:
        try:
            ap = cfg.aperture.build()
        except Exception as exc:  # any construction failure is a config problem
            p["aperture"] = f"{type(exc).__name__}: {exc}"
            ap = None
        if ap is not None and s and "sweep.s_over_sigma" not in p:
            measured = {"spade_fi", "direct_fi"} & set(cfg.quantities)
            if "spade_fi" in measured and ap.kind != "gaussian":
                p["sweep.quantities"] = "spade_fi needs aperture.kind = gaussian"
            if measured and "sweep.delta" not in p:
                smin = s[0] * ap.psf_width
                if smin < 10 * cfg.delta:
                    p["sweep.s_over_sigma"] = (f"{', '.join(sorted(measured))} need s >= 10*delta "
                                               f"(smallest s is {smin:g})")
    return p


def load_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError({"config": f"cannot read {path}: {exc}"}) from exc
    return config_from_pairs(parse_pairs(text), base_dir=path.parent)
