"""Classical Fisher information of concrete measurements.

Two measurements on the image plane: photon counting in Hermite-Gauss
modes matched to the PSF (SPADE) and ideal direct intensity imaging.
Both are quoted per emitted photon, so the "photon lost in the aperture"
outcome is part of the distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .errors import ApertureNotGaussian, TailTooHeavy
from .numerics import DEFAULT_SPEC, ComplexProfile, QuadratureSpec, integrate
from .optics import Aperture, SourcePair, transmission_factor

TAIL_LIMIT = 1e-10
MIN_Q_MAX = 10
_TINY = 1e-300


@dataclass(frozen=True)
class OutcomeDistribution:
    """P_q for q = 0..q_max, plus the "photon lost" remainder, per emitted photon.

    ``tail_mass`` bounds the fraction of detected photons that land beyond
    ``q_max``.
    """

    probs: np.ndarray
    dprobs: np.ndarray
    remainder: float
    dremainder: float
    q_max: int
    tail_mass: float

    @property
    def total(self) -> float:
        return float(self.probs.sum() + self.remainder)

    def outcomes(self):
        """(P, dP/ds) over every outcome, remainder last."""
        return (np.append(self.probs, self.remainder), np.append(self.dprobs, self.dremainder))


def hermite_functions(t: np.ndarray, q_max: int) -> np.ndarray:
    """Orthonormal Hermite functions h_0..h_qmax at ``t`` via the stable recurrence."""
    t = np.asarray(t, dtype=float)
    out = np.empty((q_max + 1,) + t.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * t * t)
    if q_max >= 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for n in range(1, q_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * t * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hg_modes(y: np.ndarray, sigma: float, q_max: int) -> np.ndarray:
    """HG modes whose ground-state intensity has standard deviation ``sigma``."""
    return hermite_functions(y / (math.sqrt(2) * sigma), q_max) / (2 * sigma * sigma) ** 0.25


def _image_branches(ap: Aperture, s: float, spec: QuadratureSpec):
    """Image-plane amplitudes of the two branches and their s-derivatives.

    The FT of A(x)cos(pi x s + phi/2) is (e^{i phi/2} u(y - s/2) + e^{-i phi/2} u(y + s/2))/2.
    """
    u = ap.cpsf(spec)
    du = ap.cpsf_slope(spec)

    def amps(y):
        um, up = u(y - s / 2), u(y + s / 2)
        dm, dp = du(y - s / 2), du(y + s / 2)
        a0 = 0.5 * (um + up)
        api = 0.5j * (um - up)
        d0 = 0.25 * (dp - dm)
        dpi = -0.25j * (dm + dp)
        return np.stack([a0, api, d0, dpi]).astype(complex)

    return amps, u.decay_scale


def _per_emitted_coefficients(gamma: complex, width: float, convention: str) -> np.ndarray:
    k = transmission_factor(convention)
    return k * width / 2 * np.array([[1 + gamma.real, gamma.imag], [gamma.imag, 1 - gamma.real]],
                                    dtype=complex)


def _probabilities(B: np.ndarray, c: np.ndarray, dc: np.ndarray):
    """P = sum_ij B_ij c_i conj(c_j) and its derivative, vectorised over the last axis."""
    p = np.einsum("ij,i...,j...->...", B, c, np.conj(c)).real
    dp = 2 * np.einsum("ij,i...,j...->...", B, dc, np.conj(c)).real
    return p, dp


def _poisson_q_max(mean: float, limit: float) -> int:
    q = MIN_Q_MAX
    while poisson.sf(q, mean) >= limit:
        q += 1
    return q


def spade_distribution(ap: Aperture, src: SourcePair, q_max: int | None = None,
                       spec: QuadratureSpec = DEFAULT_SPEC,
                       convention: str = "paper") -> OutcomeDistribution:
    """Mode-sorting statistics for point sources behind a Gaussian aperture.

    ``q_max=None`` picks the smallest cut-off whose Poisson tail bound is
    below ``TAIL_LIMIT``; an explicit ``q_max`` that leaves a heavier tail
    raises :class:`TailTooHeavy`.
    """
    if ap.kind != "gaussian":
        raise ApertureNotGaussian(f"SPADE mode matching needs a Gaussian aperture, got {ap.name}")
    sigma = ap.sigma
    s = src.separation
    mean = s * s / (16 * sigma * sigma)
    B = _per_emitted_coefficients(src.coherence, src.width, convention)
    amps, decay = _image_branches(ap, s, spec)

    # photon mass and slope straight from the branch amplitudes
    def mass_integrand(y):
        a = amps(y)
        p, dp = _probabilities(B, a[:2], a[2:])
        return np.stack([p, dp])

    prof = ComplexProfile(mass_integrand, decay, offset=s / 2)
    mass, dmass = np.real(integrate(prof, spec))

    # tail bound: each branch is a sum of two displaced Gaussians, each Poissonian in q
    u_norm = 1 / (2 * sigma * math.sqrt(2 * math.pi))
    trace_b = float(np.trace(B).real)

    def tail_bound(q):
        return trace_b * u_norm * poisson.sf(q, mean) / max(mass, _TINY)

    if q_max is None:
        q_max = _poisson_q_max(mean, TAIL_LIMIT * max(mass, _TINY) / max(trace_b * u_norm, _TINY))
    elif q_max < MIN_Q_MAX:
        raise ValueError(f"q_max must be at least {MIN_Q_MAX}")
    tail = float(tail_bound(q_max))
    if tail >= TAIL_LIMIT:
        raise TailTooHeavy(f"tail mass bound {tail:.2e} at q_max = {q_max}; raise q_max")

    def overlaps(y):
        modes = hg_modes(y, sigma, q_max)
        a = amps(y)
        return (modes[None, :, :] * a[:, None, :]).reshape(-1, y.size)

    ov = integrate(ComplexProfile(overlaps, decay, offset=s / 2), spec)
    ov = np.asarray(ov).reshape(4, q_max + 1)
    probs, dprobs = _probabilities(B, ov[:2], ov[2:])
    probs = np.maximum(probs, 0.0)
    return OutcomeDistribution(probs, dprobs, 1.0 - mass, -dmass, int(q_max), tail)


def classical_fi(dist) -> float:
    """sum_q (dP_q/ds)^2 / P_q over outcomes with P_q > 1e-300.

    ``dist`` is an :class:`OutcomeDistribution` or a ``(P, dP)`` pair of arrays.
    """
    if isinstance(dist, OutcomeDistribution):
        p, dp = dist.outcomes()
    else:
        p, dp = (np.asarray(v, dtype=float) for v in dist)
    keep = p > _TINY
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def spade_fi(ap: Aperture, src: SourcePair, spec: QuadratureSpec = DEFAULT_SPEC,
             convention: str = "paper") -> float:
    """SPADE Fisher information per emitted photon."""
    return classical_fi(spade_distribution(ap, src, None, spec, convention))


def direct_imaging_fi(ap: Aperture, src: SourcePair, spec: QuadratureSpec = DEFAULT_SPEC,
                      convention: str = "paper") -> float:
    """Fisher information of ideal intensity imaging, per emitted photon.

    int (dI/ds)^2 / I dy over the image plane plus the "photon lost" outcome.
    PSFs with algebraic tails (hard-edged pupils) make the integrand decay
    too slowly for any finite window and raise ``DomainTooSmall``.
    """
    s = src.separation
    B = _per_emitted_coefficients(src.coherence, src.width, convention)
    amps, decay = _image_branches(ap, s, spec)

    def integrand(y):
        a = amps(y)
        i, di = _probabilities(B, a[:2], a[2:])
        ok = i > _TINY
        ratio = np.zeros_like(i)
        ratio[ok] = di[ok] ** 2 / i[ok]
        return np.stack([ratio, i, di])

    fi, mass, dmass = np.real(integrate(ComplexProfile(integrand, decay, offset=s / 2), spec))
    lost = 1.0 - mass
    return float(fi + (dmass * dmass / lost if lost > _TINY else 0.0))
