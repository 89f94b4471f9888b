"""1-D 4f imaging of two small rectangular sources.

Units are dimensionless with f*lambda = 1 and unit magnification, so the
pupil coordinate is the spatial frequency of the object field and the
coherent PSF is the Fourier transform of the aperture transmission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DegenerateSource, InvalidAperture, InvalidSource
from .numerics import (DEFAULT_SPEC, ComplexProfile, QuadratureSpec, fourier_transform,
                       integrate, sinc)

#: transmission prefactor kappa in p = kappa * delta * n(phi, s)
CONVENTIONS = {"paper": 2.0 / math.pi, "physical": 2.0}


def transmission_factor(convention: str) -> float:
    try:
        return CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown convention {convention!r}; use one of {sorted(CONVENTIONS)}")


@dataclass(frozen=True)
class Aperture:
    """Even, passive pupil transmission A(x).

    Build instances with the ``gaussian``, ``hard_edge``,
    ``gaussian_mixture``, ``from_samples``/``from_file`` or ``identity``
    constructors rather than directly.
    """

    kind: str
    profile: ComplexProfile
    parameters: tuple = ()
    lossless: bool = False
    cpsf_closed_form: Callable | None = field(default=None, repr=False, compare=False)
    cpsf_slope_closed_form: Callable | None = field(default=None, repr=False, compare=False)
    cpsf_decay: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "hard_edge", "custom"):
            raise InvalidAperture(f"unknown aperture kind {self.kind!r}")
        if not self.lossless:
            self.check()

    # constructors ---------------------------------------------------------

    @classmethod
    def gaussian(cls, sigma: float) -> "Aperture":
        """A(x) = exp(-4 pi^2 sigma^2 x^2); |cPSF|^2 has standard deviation sigma."""
        if not sigma > 0:
            raise InvalidAperture("sigma must be positive")
        a = 4 * math.pi ** 2 * sigma ** 2
        norm = 1.0 / (2 * math.sqrt(math.pi) * sigma)
        prof = ComplexProfile(lambda x: np.exp(-a * x * x), 1 / (2 * math.pi * sigma),
                              label=f"gaussian(sigma={sigma:g})")
        return cls(
            "gaussian", prof, (("sigma", float(sigma)),),
            cpsf_closed_form=lambda x: norm * np.exp(-x * x / (4 * sigma ** 2)),
            cpsf_slope_closed_form=lambda x: -x / (2 * sigma ** 2) * norm * np.exp(-x * x / (4 * sigma ** 2)),
            cpsf_decay=2 * sigma,
        )

    @classmethod
    def hard_edge(cls, half_width: float) -> "Aperture":
        """Slit of full width 2*half_width with unit transmission."""
        w = float(half_width)
        if not w > 0:
            raise InvalidAperture("half_width must be positive")
        prof = ComplexProfile(lambda x: (np.abs(x) <= w).astype(float), w, support=w,
                              breakpoints=(-w, w), label=f"hard_edge(half_width={w:g})")

        def slope(x):
            x = np.asarray(x, dtype=float)
            out = np.empty_like(x)
            small = np.abs(x) < 1e-8
            xs = x[~small]
            out[~small] = (2 * w * np.cos(2 * math.pi * w * xs) * 2 * math.pi * w * xs
                           - 2 * w * np.sin(2 * math.pi * w * xs)) / (2 * math.pi * w * xs * xs)
            out[small] = -(2 * w) * (2 * math.pi * w) ** 2 * x[small] / 3
            return out

        return cls("hard_edge", prof, (("half_width", w),),
                   cpsf_closed_form=lambda x: 2 * w * sinc(2 * w * np.asarray(x, dtype=float)),
                   cpsf_slope_closed_form=slope, cpsf_decay=1 / w)

    @classmethod
    def gaussian_mixture(cls, weights, sigmas) -> "Aperture":
        """A(x) = sum_j w_j exp(-4 pi^2 sigma_j^2 x^2), w_j >= 0, sum w_j <= 1."""
        w = np.asarray(weights, dtype=float)
        sg = np.asarray(sigmas, dtype=float)
        if w.shape != sg.shape or w.ndim != 1 or len(w) == 0:
            raise InvalidAperture("weights and sigmas must be equal-length 1-D sequences")
        if np.any(w < 0) or w.sum() > 1 + 1e-12 or np.any(sg <= 0):
            raise InvalidAperture("need w_j >= 0, sum(w) <= 1 and sigma_j > 0")
        a = 4 * math.pi ** 2 * sg ** 2
        norms = w / (2 * math.sqrt(math.pi) * sg)

        def ev(x):
            return np.exp(-np.multiply.outer(x * x, a)) @ w

        def u(x):
            x = np.asarray(x, dtype=float)
            return np.exp(-np.multiply.outer(x * x, 1 / (4 * sg ** 2))) @ norms

        def du(x):
            x = np.asarray(x, dtype=float)
            g = np.exp(-np.multiply.outer(x * x, 1 / (4 * sg ** 2)))
            return -(g * np.multiply.outer(x, 1 / (2 * sg ** 2))) @ norms

        label = "mixture(" + ",".join(f"{wi:.4g}@{si:.4g}" for wi, si in zip(w, sg)) + ")"
        prof = ComplexProfile(ev, 1 / (2 * math.pi * sg.min()), label=label)
        return cls("custom", prof, (("weights", tuple(w)), ("sigmas", tuple(sg))),
                   cpsf_closed_form=u, cpsf_slope_closed_form=du, cpsf_decay=2 * sg.max())

    @classmethod
    def random_mixture(cls, rng: np.random.Generator, components: int = 3,
                       sigma_range=(0.5, 2.0)) -> "Aperture":
        """Seeded random passive Gaussian mixture, used for oracle sweeps."""
        w = rng.uniform(0.1, 1.0, components)
        w = w / w.sum() * rng.uniform(0.6, 1.0)
        sg = rng.uniform(*sigma_range, components)
        return cls.gaussian_mixture(w, sg)

    @classmethod
    def from_samples(cls, x, t) -> "Aperture":
        """Linearly interpolated transmission, zero outside the sampled range."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if x.ndim != 1 or x.shape != t.shape or len(x) < 2:
            raise InvalidAperture("need two equal-length columns with at least 2 samples")
        order = np.argsort(x)
        x, t = x[order], t[order]
        edge = float(max(abs(x[0]), abs(x[-1])))

        def ev(z):
            return np.interp(z, x, t, left=0.0, right=0.0)

        prof = ComplexProfile(ev, edge / DECAY_SAFE, support=edge,
                              breakpoints=tuple(float(v) for v in x), label="sampled")
        return cls("custom", prof, (("samples", len(x)),), cpsf_decay=1 / edge)

    @classmethod
    def from_file(cls, path) -> "Aperture":
        data = np.loadtxt(Path(path), ndmin=2)
        if data.shape[1] != 2:
            raise InvalidAperture(f"{path}: expected two columns (coordinate, transmission)")
        return cls.from_samples(data[:, 0], data[:, 1])

    @classmethod
    def identity(cls) -> "Aperture":
        """A = 1 everywhere: no losses and no blurring."""
        prof = ComplexProfile(lambda x: np.ones_like(x), math.inf, label="identity")
        return cls("custom", prof, (), lossless=True)

    # properties -----------------------------------------------------------

    @property
    def name(self) -> str:
        return self.profile.label or self.kind

    @property
    def sigma(self) -> float | None:
        return dict(self.parameters).get("sigma")

    @property
    def psf_width(self) -> float:
        """Length unit for s/sigma style reporting (sigma for Gaussian apertures)."""
        return self.sigma if self.sigma is not None else 1.0

    def __call__(self, x):
        return self.profile(x)

    def check(self, samples: int = 401) -> None:
        """Evenness and passivity at sampled points."""
        half = self.profile.extent
        x = np.linspace(0.0, half, samples)
        a_pos, a_neg = self.profile(x), self.profile(-x)
        asym = np.max(np.abs(a_pos - a_neg))
        if asym > 1e-12:
            raise InvalidAperture(f"aperture is not even: max |A(x) - A(-x)| = {asym:.3e}")
        peak = np.max(np.abs(a_pos))
        if peak > 1 + 1e-12:
            raise InvalidAperture(f"aperture amplifies: max |A| = {peak:.6g} > 1")

    # coherent PSF ----------------------------------------------------------

    def cpsf(self, spec: QuadratureSpec = DEFAULT_SPEC) -> ComplexProfile:
        """u(x) = FT[A](x)."""
        if self.lossless:
            raise InvalidAperture("the identity aperture has a Dirac-delta cPSF")
        if self.cpsf_closed_form is not None:
            ev = self.cpsf_closed_form
        else:
            prof = self.profile
            ev = lambda x: fourier_transform(prof, x, spec)
        return ComplexProfile(ev, self.cpsf_decay, label=f"cpsf[{self.name}]")

    def cpsf_slope(self, spec: QuadratureSpec = DEFAULT_SPEC) -> ComplexProfile:
        """u'(x) = FT[-2 pi i k A(k)](x)."""
        if self.cpsf_slope_closed_form is not None:
            ev = self.cpsf_slope_closed_form
        else:
            prof = self.profile
            ramp = ComplexProfile(lambda k: -2j * math.pi * k * prof(k), prof.decay_scale,
                                  prof.support, prof.breakpoints)
            ev = lambda x: fourier_transform(ramp, x, spec)
        return ComplexProfile(ev, self.cpsf_decay, label=f"cpsf'[{self.name}]")


#: sampled apertures have compact support; decay_scale only feeds defaults
DECAY_SAFE = 12.0


@dataclass(frozen=True)
class SourcePair:
    """Two rectangular sources of width ``width`` at +-separation/2.

    ``coherence`` is the complex degree of coherence gamma = r exp(i phi).
    """

    separation: float
    width: float
    coherence: complex = 0j
    emission_prob: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "coherence", complex(self.coherence))
        s, d = self.separation, self.width
        if not s > 0:
            raise InvalidSource("separation must be positive")
        if not d > 0:
            raise InvalidSource("width must be positive")
        if s < 10 * d * (1 - 1e-12):
            raise InvalidSource(f"sources must be well separated: s = {s:g} < 10*delta = {10 * d:g}")
        if abs(self.coherence) > 1 + 1e-12:
            from .errors import InvalidCoherence
            raise InvalidCoherence(f"|gamma| = {abs(self.coherence):.6g} exceeds 1")
        if not 0 < self.emission_prob <= 0.1:
            raise InvalidSource("emission_prob must lie in (0, 0.1]")

    @property
    def r(self) -> float:
        return min(abs(self.coherence), 1.0)

    @property
    def phase(self) -> float:
        return float(np.angle(self.coherence)) if self.coherence != 0 else 0.0


@dataclass(frozen=True)
class PlaneFields:
    """Field in the object (I), pupil (II), post-aperture (III) and image (IV) planes."""

    object: ComplexProfile
    pupil: ComplexProfile
    post_aperture: ComplexProfile
    image: ComplexProfile


def object_field(src: SourcePair, phase: float) -> ComplexProfile:
    s, d = src.separation, src.width
    em, ep = np.exp(-0.5j * phase), np.exp(0.5j * phase)

    def ev(x):
        right = (np.abs(x - s / 2) <= d / 2).astype(float)
        left = (np.abs(x + s / 2) <= d / 2).astype(float)
        return right * em + left * ep

    edges = (-s / 2 - d / 2, -s / 2 + d / 2, s / 2 - d / 2, s / 2 + d / 2)
    return ComplexProfile(ev, d, support=s / 2 + d / 2, breakpoints=edges, label="E_I")


def pupil_field(src: SourcePair, phase: float) -> ComplexProfile:
    """Closed-form FT of the rect pair: 2 delta sinc(x delta) cos(pi x s + phase/2)."""
    s, d = src.separation, src.width

    def ev(x):
        return (2 * d * sinc(x * d) * np.cos(np.pi * x * s + phase / 2)).astype(complex)

    # sinc tails decay only algebraically; integrals of this field alone go through Parseval
    return ComplexProfile(ev, 1 / d, label="E_II")


def propagate_4f(src: SourcePair, phase: float, ap: Aperture,
                 spec: QuadratureSpec = DEFAULT_SPEC) -> PlaneFields:
    """Fields in the four planes of the 4f system for relative phase ``phase``."""
    obj = object_field(src, phase)
    pupil = pupil_field(src, phase)
    A = ap.profile

    def post(x):
        return pupil(x) * A(x)

    post_prof = ComplexProfile(post, A.decay_scale, A.support, A.breakpoints, label="E_III")

    def image(x):
        return fourier_transform(post_prof, x, spec)

    image_prof = ComplexProfile(image, ap.cpsf_decay, offset=src.separation / 2 + src.width,
                                label="E_IV")
    return PlaneFields(obj, pupil, post_prof, image_prof)


def transmission_probability(src: SourcePair, phase: float, ap: Aperture,
                             spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Power ratio int |E_II A|^2 / int |E_II|^2 (exact, finite width)."""
    fields = propagate_4f(src, phase, ap, spec)
    # Parseval: the pupil power equals the object-plane power, a finite integral
    denom = integrate(ComplexProfile(lambda x: np.abs(fields.object(x)) ** 2, src.width,
                                     fields.object.support, fields.object.breakpoints), spec).real
    if denom < 1e-300:
        raise DegenerateSource("source carries no power")
    if ap.lossless:
        return 1.0
    post = fields.post_aperture
    num = integrate(ComplexProfile(lambda x: np.abs(post(x)) ** 2, post.decay_scale,
                                   post.support, post.breakpoints), spec).real
    return num / denom


def branch_transmission(ap: Aperture, s: float, phase: float, width: float,
                       spec: QuadratureSpec = DEFAULT_SPEC, convention: str = "paper") -> float:
    """kappa * delta * n(phase, s): the per-branch transmission used in the state."""
    from .state import build_unnormalized_state
    st = build_unnormalized_state(ap, s, phase, width, point_source_mode=False)
    return transmission_factor(convention) * width * st.norm2(spec)
