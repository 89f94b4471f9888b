"""Single-photon states behind the aperture and the weak-source density matrix.

The density matrix is never materialised on a grid.  It is carried as the
two unnormalised branch vectors psi~_0, psi~_pi (symmetric and
antisymmetric in x), the 2x2 coefficient matrix B and the vacuum weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCoherence
from .numerics import DEFAULT_SPEC, ComplexProfile, QuadratureSpec, combine, integrate, sinc
from .optics import Aperture, SourcePair, transmission_factor


def _phase_weights(phase: float):
    """cos(phase/2), sin(phase/2) with exact values on the two branches."""
    if phase == 0.0:
        return 1.0, 0.0
    if phase == math.pi:
        return 0.0, 1.0
    return math.cos(phase / 2), math.sin(phase / 2)


@dataclass(frozen=True)
class UnnormalizedState:
    """psi~_phi(x) = A(x) sinc(x delta) cos(pi x s + phi/2).

    In ``point_source_mode`` the sinc factor is dropped (delta -> 0 shape,
    delta kept only as an overall prefactor elsewhere).
    """

    aperture: Aperture
    phase: float
    separation: float
    width: float
    point_source_mode: bool = False

    def _envelope(self, x):
        a = self.aperture.profile(x)
        if self.point_source_mode:
            return a
        return a * sinc(x * self.width)

    def _profile(self, ev, label):
        prof = self.aperture.profile
        return ComplexProfile(ev, prof.decay_scale, prof.support, prof.breakpoints, label=label)

    @property
    def amplitude(self) -> ComplexProfile:
        c, sn = _phase_weights(self.phase)
        s = self.separation

        def ev(x):
            arg = np.pi * x * s
            return self._envelope(x) * (c * np.cos(arg) - sn * np.sin(arg))

        return self._profile(ev, f"psi~[{self.phase:.6g}]")

    @property
    def derivative(self) -> ComplexProfile:
        """Analytic d/ds: -pi x A(x) sinc(x delta) sin(pi x s + phi/2)."""
        c, sn = _phase_weights(self.phase)
        s = self.separation

        def ev(x):
            arg = np.pi * x * s
            return -np.pi * x * self._envelope(x) * (c * np.sin(arg) + sn * np.cos(arg))

        return self._profile(ev, f"d psi~[{self.phase:.6g}]")

    def norm2(self, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        """n(phi, s) = <psi~_phi|psi~_phi>."""
        amp = self.amplitude
        sq = ComplexProfile(lambda x: np.abs(amp(x)) ** 2, amp.decay_scale, amp.support,
                            amp.breakpoints)
        return integrate(sq, spec).real

    def at(self, separation: float) -> "UnnormalizedState":
        return UnnormalizedState(self.aperture, self.phase, separation, self.width,
                                 self.point_source_mode)


def build_unnormalized_state(ap: Aperture, s: float, phase: float, width: float,
                             point_source_mode: bool = False) -> UnnormalizedState:
    if s < 0:
        raise ValueError("separation must be non-negative")
    if width < 0 or (width == 0 and not point_source_mode):
        raise ValueError("width must be positive unless point_source_mode is set")
    return UnnormalizedState(ap, float(phase), float(s), float(width), bool(point_source_mode))


def coherence_angle(gamma: complex) -> float:
    """chi = arccos(Re gamma) in [0, pi]."""
    gamma = complex(gamma)
    if abs(gamma) > 1 + 1e-12:
        raise InvalidCoherence(f"|gamma| = {abs(gamma):.6g} exceeds 1")
    return math.acos(min(1.0, max(-1.0, gamma.real)))


def branch_weights(re_gamma: float):
    """(cos(chi/2), sin(chi/2)) = (sqrt((1+Re g)/2), sqrt((1-Re g)/2))."""
    re_gamma = min(1.0, max(-1.0, float(re_gamma)))
    return math.sqrt((1 + re_gamma) / 2), math.sqrt((1 - re_gamma) / 2)


@dataclass(frozen=True)
class CoefficientMatrix:
    """B = scale * [[1 + Re g, Im g], [Im g, 1 - Re g]], scale = kappa delta p_em / 2."""

    entries: np.ndarray
    scale: float

    @classmethod
    def build(cls, gamma: complex, width: float, emission_prob: float,
              convention: str = "paper") -> "CoefficientMatrix":
        gamma = complex(gamma)
        scale = transmission_factor(convention) / 2 * width * emission_prob
        b = scale * np.array([[1 + gamma.real, gamma.imag], [gamma.imag, 1 - gamma.real]])
        b.setflags(write=False)
        return cls(b, scale)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.entries))


@dataclass(frozen=True)
class TwoSourceState:
    """rho_p = sum_ij B_ij |psi~_i><psi~_j| + p3 |0><0|, i, j in {0, pi}."""

    psi0: UnnormalizedState
    psi_pi: UnnormalizedState
    coeffs: CoefficientMatrix
    p1: float
    p2: float
    p3: float
    chi: float
    gamma: complex
    emission_prob: float
    convention: str = "paper"

    @property
    def separation(self) -> float:
        return self.psi0.separation

    @property
    def width(self) -> float:
        return self.psi0.width

    @property
    def aperture(self) -> Aperture:
        return self.psi0.aperture

    @property
    def photon_probability(self) -> float:
        return self.p1 + self.p2

    def single_photon_weights(self) -> np.ndarray:
        """Coefficients W with rho_p^(1) = sum_ij W_ij |psi~_i><psi~_j|."""
        return self.coeffs.entries / self.photon_probability

    def psi_chi(self) -> ComplexProfile:
        c, sn = branch_weights(self.gamma.real)
        return combine([self.psi0.amplitude, self.psi_pi.amplitude], [c, sn], label="psi~_chi")

    def at(self, separation: float, spec: QuadratureSpec = DEFAULT_SPEC) -> "TwoSourceState":
        src = _SourceLike(separation, self.width, self.gamma, self.emission_prob)
        return _assemble(self.aperture, src, spec, self.psi0.point_source_mode, self.convention)


@dataclass(frozen=True)
class _SourceLike:
    separation: float
    width: float
    coherence: complex
    emission_prob: float


def assemble_state(ap: Aperture, src: SourcePair, spec: QuadratureSpec = DEFAULT_SPEC,
                   point_source_mode: bool = False, convention: str = "paper") -> TwoSourceState:
    """Weak partially coherent source pair behind the aperture.

    p1 and p2 use the transmission kappa*delta*n(phi, s) of the chosen
    convention; the branch phases are phi = arg(gamma) and phi + pi.
    """
    return _assemble(ap, src, spec, point_source_mode, convention)


def _assemble(ap, src, spec, point_source_mode, convention) -> TwoSourceState:
    gamma = complex(src.coherence)
    chi = coherence_angle(gamma)
    s, d = src.separation, src.width
    psi0 = build_unnormalized_state(ap, s, 0.0, d, point_source_mode)
    psi_pi = build_unnormalized_state(ap, s, math.pi, d, point_source_mode)
    coeffs = CoefficientMatrix.build(gamma, d, src.emission_prob, convention)

    r = min(abs(gamma), 1.0)
    # arg(0) is undefined; phi = chi = pi/2 splits the incoherent mixture symmetrically
    phi = float(np.angle(gamma)) if gamma != 0 else math.pi / 2
    kappa = transmission_factor(convention)
    n_phi = build_unnormalized_state(ap, s, phi, d, point_source_mode).norm2(spec)
    n_phi_pi = build_unnormalized_state(ap, s, phi + math.pi, d, point_source_mode).norm2(spec)
    p1 = src.emission_prob * kappa * d * n_phi * (1 + r) / 2
    p2 = src.emission_prob * kappa * d * n_phi_pi * (1 - r) / 2
    p3 = 1.0 - p1 - p2
    return TwoSourceState(psi0, psi_pi, coeffs, p1, p2, p3, chi, gamma, src.emission_prob,
                          convention)
