"""Command-line front end: ``twosource {sweep,fig2,loss-bound,selftest}``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, TwoSourceError
from .loss import asymptotic_bound, gaussian_psf, gram_bound, rect_mode_transmission
from .optics import Aperture
from .sweep import format_float, plot_records, reproduce_fig2, run_sweep, serialize


def _sweep(args) -> int:
    cfg = load_config(args.config)
    records = run_sweep(cfg)
    text = serialize(records, cfg.output)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        if args.svg or cfg.svg:
            for q in cfg.quantities:
                plot_records(records, out.with_name(f"{out.stem}_{q}.svg"), q, title=q,
                             xlabel="s / sigma", ylabel=records[0].units if records else "",
                             log_y=q.startswith("f_det"))
    else:
        sys.stdout.write(text)
        if args.svg or cfg.svg:
            print("note: --svg needs --out to know where to write plots", file=sys.stderr)
    failed = [r for r in records if r.failed]
    for r in failed:
        print(f"failed: {r.quantity} at Re g={r.re_gamma:g}, Im g={r.im_gamma:g}, "
              f"s/sigma={r.s_over_sigma:g}: {r.reason}", file=sys.stderr)
    return 1 if failed else 0


def _fig2(args) -> int:
    for path in reproduce_fig2(args.sigma, args.out_dir, svg=args.svg):
        print(path)
    return 0


def _loss_bound(args) -> int:
    sigma, M, spacing = args.sigma, args.modes, args.spacing
    if not (sigma > 0 and spacing > 0 and M >= 1):
        raise ConfigError({"arguments": "need sigma > 0, spacing > 0 and modes >= 1"})
    gb = gram_bound(gaussian_psf(sigma), M, spacing, sigma=sigma)
    p4f = rect_mode_transmission(Aperture.gaussian(sigma), spacing)
    rows = [
        ("modes", M),
        ("spacing", spacing),
        ("sigma", sigma),
        ("abs_sum", gb.abs_sum),
        ("bound", gb.bound),
        ("asymptotic_bound", asymptotic_bound(sigma, spacing)),
        ("measured_constant", gb.bound * sigma / spacing),
        ("reference_constant_sqrt_8pi", math.sqrt(8 * math.pi)),
        ("rect_mode_transmission_4f", p4f),
        ("bound_dominates_4f", gb.bound * (1 + 1e-6) >= p4f),
    ]
    for key, value in rows:
        print(f"{key} = {format_float(float(value)) if isinstance(value, float) else value}")
    return 0


def _selftest(args) -> int:
    from .selftest import run_selftest
    return 0 if run_selftest(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twosource",
                                description="Fisher information for the separation of two weak sources.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="evaluate quantities over a parameter grid")
    s.add_argument("--config", required=True, help="key = value config file")
    s.add_argument("--out", help="output file (default: stdout)")
    s.add_argument("--svg", action="store_true", help="also write one SVG plot per quantity")
    s.set_defaults(func=_sweep)

    f = sub.add_parser("fig2", help="QFI panels for a Gaussian aperture")
    f.add_argument("--sigma", type=float, required=True)
    f.add_argument("--out-dir", required=True)
    f.add_argument("--svg", action="store_true")
    f.set_defaults(func=_fig2)

    lb = sub.add_parser("loss-bound", help="Gram-matrix ceiling on per-mode transmission")
    lb.add_argument("--sigma", type=float, required=True)
    lb.add_argument("--modes", type=int, required=True)
    lb.add_argument("--spacing", type=float, required=True)
    lb.set_defaults(func=_loss_bound)

    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.set_defaults(func=_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for key, msg in exc.problems.items():
            print(f"config error: {key}: {msg}", file=sys.stderr)
        return 2
    except (TwoSourceError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
