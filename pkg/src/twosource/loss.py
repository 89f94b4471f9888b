"""Structural limits on transmission for imaging with a finite-width PSF.

If M orthonormal input modes spaced by delta are mapped onto outputs whose
detected parts overlap (through the PSF), the per-mode detection
probability p is capped by M / sum_ij |<phi_i1|phi_j1>|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import ParsevalMismatch, UnnormalizedPSF
from .numerics import (DEFAULT_SPEC, ComplexProfile, QuadratureSpec, fourier_transform,
                       integrate, sinc)
from .optics import Aperture

NORM_TOL = 1e-10
SPOT_CHECKS = 100


def gaussian_psf(sigma: float) -> ComplexProfile:
    """Unit-norm real Gaussian amplitude whose intensity has standard deviation sigma."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    norm = (2 * math.pi * sigma * sigma) ** -0.25
    return ComplexProfile(lambda x: norm * np.exp(-x * x / (4 * sigma * sigma)), 2 * sigma,
                          label=f"gaussian_psf(sigma={sigma:g})")


def gaussian_overlap(lag: np.ndarray, sigma: float) -> np.ndarray:
    """<u(. - a)|u(. - b)> for the unit-norm Gaussian PSF at a - b = lag."""
    lag = np.asarray(lag, dtype=float)
    return np.exp(-lag * lag / (8 * sigma * sigma))


@dataclass(frozen=True)
class GramBound:
    """Ceiling on the per-mode transmission for M modes spaced by ``spacing``.

    ``overlaps[d]`` is <phi_i1|phi_(i+d)1>; the full M x M Gram matrix is
    Toeplitz and built only on request.
    """

    mode_count: int
    spacing: float
    overlaps: np.ndarray = field(repr=False)
    abs_sum: float
    bound: float

    @property
    def gram(self) -> np.ndarray:
        c = np.zeros(self.mode_count, dtype=complex)
        n = min(len(self.overlaps), self.mode_count)
        c[:n] = self.overlaps[:n]
        return toeplitz(np.conj(c), c)


def _abs_sum(overlaps: np.ndarray, M: int) -> float:
    c = np.abs(np.asarray(overlaps)[:M])
    d = np.arange(len(c))
    return float(M * c[0] + 2 * np.sum((M - d[1:]) * c[1:]))


def _lag_overlaps(u: ComplexProfile, lags: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    def integrand(x):
        return np.conj(u(x))[None, :] * u(x[None, :] - lags[:, None])

    reach = float(np.max(np.abs(lags))) if len(lags) else 0.0
    support = None if u.support is None else u.support + reach
    prof = ComplexProfile(integrand, u.decay_scale, support, u.breakpoints, u.offset + reach)
    return np.atleast_1d(integrate(prof, spec))


def _check_normalized(u: ComplexProfile, spec: QuadratureSpec) -> None:
    n = integrate(ComplexProfile(lambda x: np.abs(u(x)) ** 2, u.decay_scale, u.support,
                                 u.breakpoints, u.offset), spec).real
    if abs(n - 1) > NORM_TOL:
        raise UnnormalizedPSF(f"int |u|^2 = {n:.12g}, expected 1")


def gram_bound(u: ComplexProfile, M: int, spacing: float, spec: QuadratureSpec = DEFAULT_SPEC,
               sigma: float | None = None, seed: int = 0) -> GramBound:
    """p <= M / sum_ij |G_ij| with G_ij = int u*(x - x_i) u(x - x_j) dx.

    With ``sigma`` set, ``u`` is taken to be :func:`gaussian_psf` and the
    overlaps use the closed form, spot-checked against quadrature on
    ``SPOT_CHECKS`` random pairs.  Otherwise the overlaps are integrated
    for every lag where they are not negligible.
    """
    M = int(M)
    if M < 1:
        raise ValueError("need at least one mode")
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    _check_normalized(u, spec)
    if sigma is not None:
        overlaps = gaussian_overlap(np.arange(M) * spacing, sigma).astype(complex)
        rng = np.random.default_rng(seed)
        pairs = rng.integers(0, M, size=(SPOT_CHECKS, 2))
        lags = np.unique(np.abs(pairs[:, 1] - pairs[:, 0]))
        reach = lags * spacing < 2 * u.extent
        if np.any(reach):
            quad = _lag_overlaps(u, lags[reach] * spacing, spec)
            err = np.max(np.abs(quad - overlaps[lags[reach]]))
            if err > 1e-9:
                raise ValueError(f"u does not match the Gaussian closed form (error {err:.2e})")
    else:
        span = 2 * u.extent if u.support is None else 2 * u.support
        n_lags = min(M, int(math.ceil(span / spacing)) + 1)
        overlaps = _lag_overlaps(u, np.arange(n_lags) * spacing, spec)
    total = _abs_sum(overlaps, M)
    return GramBound(M, float(spacing), overlaps, total, min(1.0, M / total))


def asymptotic_bound(sigma: float, spacing: float) -> float:
    """delta / (sigma sqrt(8 pi)): the delta << sigma << M delta limit for gaussian_psf."""
    return spacing / (sigma * math.sqrt(8 * math.pi))


def fit_constant(spacings, bounds, sigma: float) -> float:
    """Least-squares c in bound = c * delta / sigma."""
    x = np.asarray(spacings, dtype=float) / sigma
    y = np.asarray(bounds, dtype=float)
    return float(x @ y / (x @ x))


def loglog_slope(spacings, bounds) -> float:
    """Fitted exponent of bound ~ delta^slope."""
    return float(np.polyfit(np.log(spacings), np.log(bounds), 1)[0])


def rect_mode_transmission(ap: Aperture, width: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Detection probability of one rect mode of the given width through the 4f system.

    The pupil field is sqrt(width) sinc(x width), so p = width int A^2 sinc^2(x width) dx.
    """
    A = ap.profile
    prof = ComplexProfile(lambda x: np.abs(A(x)) ** 2 * sinc(x * width) ** 2, A.decay_scale,
                          A.support, A.breakpoints)
    return float(width * integrate(prof, spec).real)


def detection_probability_frequency(E: ComplexProfile, u: ComplexProfile, scale: float,
                                    spec: QuadratureSpec = DEFAULT_SPEC,
                                    E_hat: ComplexProfile | None = None,
                                    u_hat: ComplexProfile | None = None,
                                    check_norm: bool = True) -> float:
    """P = scale int |(E * u)(x)|^2 dx = scale int |E^(k) u^(k)|^2 dk.

    Both routes are computed; the transforms default to quadrature when
    ``E_hat`` / ``u_hat`` are not given.  Returns the common value or raises
    :class:`ParsevalMismatch` when the routes disagree beyond 1e-8 relative
    (plus a round-off allowance of 1e-15 of the unfiltered power).
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    if check_norm:
        _check_normalized(u, spec)
    inner = spec.with_tolerance(min(spec.rel_tolerance, 1e-12))
    # near-total filtering leaves both routes at round-off level; judge them
    # against the unfiltered power instead of against each other
    power = integrate(ComplexProfile(lambda x: np.abs(E(x)) ** 2, E.decay_scale, E.support,
                                     E.breakpoints, E.offset), inner).real
    u_power = integrate(ComplexProfile(lambda x: np.abs(u(x)) ** 2, u.decay_scale, u.support,
                                       u.breakpoints, u.offset), inner).real
    atol = 1e-15 * power * u_power
    outer = inner.with_abs_tolerance(atol)

    # (E * u)(x) as an integral over whichever factor is narrower
    if u.support is None and u.decay_scale < E.decay_scale and not u.breakpoints:
        def conv(x):
            def integrand(t):
                return u(t)[None, :] * E(np.subtract.outer(x, t))
            reach = float(np.max(np.abs(x))) if E.support is None else 0.0
            prof = ComplexProfile(integrand, u.decay_scale, None, (), u.offset + reach)
            return np.atleast_1d(integrate(prof, inner))
    else:
        def conv(x):
            def integrand(y):
                return E(y)[None, :] * u(np.subtract.outer(x, y))
            # a decaying u(x - y) pulls the product towards x: widen the window to reach it
            reach = float(np.max(np.abs(x))) if E.support is None else 0.0
            prof = ComplexProfile(integrand, E.decay_scale, E.support, E.breakpoints,
                                  E.offset + reach)
            return np.atleast_1d(integrate(prof, inner))

    spatial = integrate(ComplexProfile(lambda x: np.abs(conv(x)) ** 2, u.decay_scale,
                                       offset=E.extent), outer).real

    if E_hat is None:
        E_hat = ComplexProfile(lambda k: fourier_transform(E, k, inner), 1 / max(E.decay_scale, 1e-300))
    if u_hat is None:
        u_hat = ComplexProfile(lambda k: fourier_transform(u, k, inner), 1 / (2 * math.pi * u.decay_scale))
    # the narrower transform sets the band (E^ may decay only algebraically)
    band = min((u_hat, E_hat), key=lambda p: p.support if p.support is not None else p.decay_scale)
    freq = integrate(ComplexProfile(lambda k: np.abs(E_hat(k) * u_hat(k)) ** 2, band.decay_scale,
                                    band.support, band.breakpoints), outer).real
    diff = abs(spatial - freq)
    if diff > 1e-8 * max(abs(spatial), abs(freq)) + 2 * atol:
        rel = diff / max(abs(spatial), abs(freq), np.finfo(float).tiny)
        raise ParsevalMismatch(f"spatial {spatial:.15g} vs frequency {freq:.15g} (rel {rel:.2e})")
    return float(scale * 0.5 * (spatial + freq))
