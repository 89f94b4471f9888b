"""Fast invariant checks runnable without the test suite (``twosource selftest``)."""

from __future__ import annotations

import math
import time

import numpy as np

from .loss import detection_probability_frequency, gaussian_psf, gram_bound, rect_mode_transmission
from .measurement import spade_fi
from .numerics import ComplexProfile
from .optics import Aperture, SourcePair, object_field, pupil_field
from .oracle import oracle_qfi
from .qfi import QUANTITIES, gaussian_closed_forms, qfi_point_sources, qfi_report
from .state import assemble_state

S_GRID = (0.01, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0)
R_GRID = (-1.0, -0.98, -0.5, 0.0, 0.5, 1.0)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_closed_forms():
    ap = Aperture.gaussian(1.0)
    worst = 0.0
    for s in S_GRID:
        for R in R_GRID:
            num = qfi_point_sources(ap, s, R).values()
            ref = gaussian_closed_forms(1.0, s, R).values()
            worst = max(worst, max(_rel(num[q], ref[q]) for q in QUANTITIES))
    return worst <= 1e-6, f"worst relative error {worst:.2e}"


def check_oracle():
    ap = Aperture.gaussian(1.0)
    d = 1e-4
    worst = 0.0
    for s, R in ((0.01, -0.98), (1.0, -0.5), (3.0, 0.5)):
        st = assemble_state(ap, SourcePair(s, d, complex(R, 0.3 * math.sqrt(1 - R * R))))
        o = oracle_qfi(st)
        rep = qfi_report(ap, s, st.gamma, width=d)
        worst = max(worst, _rel(o["full"], rep.full_qfi(st.emission_prob, d)),
                    _rel(o["single"], rep.f_det_single))
    return worst <= 1e-7, f"worst relative error {worst:.2e}"


def check_spade():
    ap = Aperture.gaussian(1.0)
    d = 1e-4
    worst = 0.0
    for s in (0.1, 1.0, 3.0):
        for R in (-1.0, 0.0, 1.0):
            fi = spade_fi(ap, SourcePair(s, d, R))
            worst = max(worst, _rel(fi, qfi_point_sources(ap, s, R).f_em_full * d))
    return worst <= 1e-4, f"worst relative gap {worst:.2e}"


def check_im_gamma():
    ap = Aperture.gaussian(1.0)
    spread = 0.0
    for s in (0.3, 2.0):
        vals = [qfi_point_sources(ap, s, complex(0.5, im)).values() for im in (0.0, 0.4, -0.8)]
        spread = max(spread, max(max(v[q] for v in vals) - min(v[q] for v in vals) for q in QUANTITIES))
    return spread <= 1e-9, f"spread {spread:.2e}"


def check_gram():
    u = gaussian_psf(1.0)
    ok = True
    for d in (1e-3, 1e-2, 0.1):
        ok &= gram_bound(u, 2000, d, sigma=1.0).bound * (1 + 1e-6) >= rect_mode_transmission(Aperture.gaussian(1.0), d)
    ds = np.array([0.005, 0.01, 0.02])
    b = [gram_bound(u, 200_000, x, sigma=1.0).bound for x in ds]
    slope = float(np.polyfit(np.log(ds), np.log(b), 1)[0])
    return ok and abs(slope - 1) <= 0.01, f"slope {slope:.4f}, dominance {'ok' if ok else 'violated'}"


def check_parseval():
    ap = Aperture.gaussian(1.0)
    src = SourcePair(1.0, 0.05, 0j)
    nrm = (8 * math.pi) ** -0.25
    cp = ap.cpsf()
    u = ComplexProfile(lambda x: cp(x) / nrm, cp.decay_scale)
    a = detection_probability_frequency(object_field(src, 0.0), u, 1.0)
    b = detection_probability_frequency(object_field(src, 0.0), u, 1.0, E_hat=pupil_field(src, 0.0),
                                        u_hat=ComplexProfile(lambda k: ap.profile(k) / nrm,
                                                             ap.profile.decay_scale))
    return _rel(a, b) <= 1e-10, f"route difference {_rel(a, b):.2e}"


CHECKS = (
    ("closed forms", check_closed_forms),
    ("spectral oracle", check_oracle),
    ("spade optimality", check_spade),
    ("Im(gamma) invariance", check_im_gamma),
    ("gram bound", check_gram),
    ("parseval routes", check_parseval),
)


def run_selftest(verbose: bool = True) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({time.perf_counter() - t:.2f} s)")
    return all_ok
