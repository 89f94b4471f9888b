"""Deterministic quadrature and transforms on the real line.

Every integral in the package goes through :func:`adaptive_rule`, an
adaptive Gauss-Legendre scheme with interval bisection.  Integrands may be
vector valued: the callable receives a 1-D array of abscissae and returns
an array whose *last* axis runs over those abscissae, so a whole table of
inner products (or a transform at many frequencies) is resolved on one
shared set of nodes.

Fourier convention: ``F[f](k) = int f(x) exp(-2j*pi*k*x) dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainTooSmall, NonConvergence, StepUnderflow

#: integration half width, in decay scales, when a profile has no support
DECAY_MULTIPLE = 12.0

_ORDER = 16
_INITIAL_PANELS = 8


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate` and friends.

    ``half_width=None`` lets each integrand pick its own domain (its support,
    or ``DECAY_MULTIPLE`` decay scales past its offset).  ``abs_tolerance``
    (default off) also accepts an error below that absolute level, for
    integrals that are zero up to round-off.
    """

    half_width: float | None = None
    node_budget: int = 200_000
    rel_tolerance: float = 1e-10
    abs_tolerance: float = 0.0

    def __post_init__(self):
        if self.half_width is not None and not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not 0 < self.rel_tolerance <= 1e-3:
            raise ValueError("rel_tolerance must lie in (0, 1e-3]")
        if self.node_budget < 16:
            raise ValueError("node_budget must be at least 16")
        if not self.abs_tolerance >= 0:
            raise ValueError("abs_tolerance must be non-negative")

    def with_tolerance(self, rel_tolerance: float) -> "QuadratureSpec":
        return replace(self, rel_tolerance=rel_tolerance)

    def with_abs_tolerance(self, abs_tolerance: float) -> "QuadratureSpec":
        return replace(self, abs_tolerance=abs_tolerance)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class ComplexProfile:
    """A complex amplitude on the real line.

    ``evaluator`` must be vectorised over a 1-D float array.  ``support``,
    when given, promises the profile is exactly zero for ``|x| > support``;
    otherwise ``offset + DECAY_MULTIPLE * decay_scale`` is taken as the
    point past which the profile is negligible.  ``breakpoints`` are
    abscissae where the profile (or a derivative) is discontinuous.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    decay_scale: float
    support: float | None = None
    breakpoints: tuple = ()
    offset: float = 0.0
    label: str = field(default="", compare=False)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.evaluator(x))

    @property
    def extent(self) -> float:
        if self.support is not None:
            return float(self.support)
        return self.offset + DECAY_MULTIPLE * self.decay_scale

    def scaled(self, factor: complex) -> "ComplexProfile":
        ev = self.evaluator
        return ComplexProfile(lambda x: factor * ev(x), self.decay_scale, self.support,
                              self.breakpoints, self.offset, self.label)


def combine(profiles: Sequence[ComplexProfile], coefficients: Sequence[complex],
            label: str = "") -> ComplexProfile:
    """Linear combination sum_i c_i * f_i as a new profile."""
    profiles = list(profiles)
    coefficients = list(coefficients)

    def ev(x):
        out = 0.0
        for c, p in zip(coefficients, profiles):
            if c != 0:
                out = out + c * p(x)
        return out * np.ones_like(x)

    supports = [p.support for p in profiles]
    support = None if any(s is None for s in supports) else max(supports)
    return ComplexProfile(
        ev,
        decay_scale=max(p.decay_scale for p in profiles),
        support=support,
        breakpoints=tuple(sorted({b for p in profiles for b in p.breakpoints})),
        offset=max(p.offset for p in profiles),
        label=label,
    )


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights produced by an adaptive pass."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> np.ndarray:
        return np.asarray(values) @ self.weights

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True)
class AdaptiveResult:
    value: np.ndarray
    error: np.ndarray
    l1: np.ndarray
    rule: QuadratureRule
    evaluations: int


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return t, w


def _panel_nodes(a: np.ndarray, b: np.ndarray, n: int):
    t, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * t[None, :]
    ww = half[:, None] * w[None, :]
    return x, ww


def _initial_edges(lo: float, hi: float, breakpoints) -> np.ndarray:
    uniform = np.linspace(lo, hi, _INITIAL_PANELS + 1)
    extra = [b for b in breakpoints if lo < b < hi]
    return np.unique(np.concatenate([uniform, np.asarray(extra, dtype=float)]))


def adaptive_rule(f: Callable, lo: float, hi: float, *, breakpoints=(),
                  rel_tolerance: float = 1e-10, node_budget: int = 200_000,
                  abs_tolerance: float = 0.0) -> AdaptiveResult:
    """Adaptive Gauss-Legendre integration of ``f`` over ``[lo, hi]``.

    Each panel is integrated with an ``n``-point rule and again with the same
    rule on its two halves; the difference is the panel's error estimate.
    Panels are bisected until, for every component ``c`` of the integrand,
    the summed error is below ``rel_tolerance * int |f_c|``.  The reference
    scale is the L1 norm rather than ``|int f_c|`` so that integrals which
    vanish by symmetry still terminate.  A component whose summed error is
    below ``abs_tolerance`` also counts as converged.
    """
    n = _ORDER
    edges = _initial_edges(lo, hi, breakpoints)
    pend_a, pend_b = edges[:-1], edges[1:]
    done_a = np.empty(0)
    done_b = np.empty(0)
    done_val = done_err = done_l1 = None
    evaluations = 0
    total_len = hi - lo
    shape = None

    while True:
        m = len(pend_a)
        mid = 0.5 * (pend_a + pend_b)
        xc, wc = _panel_nodes(pend_a, pend_b, n)
        xl, wl = _panel_nodes(pend_a, mid, n)
        xr, wr = _panel_nodes(mid, pend_b, n)
        x_all = np.concatenate([xc.ravel(), xl.ravel(), xr.ravel()])
        vals = np.asarray(f(x_all))
        evaluations += x_all.size
        if shape is None:
            shape = vals.shape[:-1]
        vals = vals.reshape(-1, x_all.size)
        k = m * n
        vc = vals[:, :k].reshape(-1, m, n)
        vl = vals[:, k:2 * k].reshape(-1, m, n)
        vr = vals[:, 2 * k:].reshape(-1, m, n)
        coarse = np.einsum("cmn,mn->cm", vc, wc)
        fine = np.einsum("cmn,mn->cm", vl, wl) + np.einsum("cmn,mn->cm", vr, wr)
        l1 = np.einsum("cmn,mn->cm", np.abs(vl), wl) + np.einsum("cmn,mn->cm", np.abs(vr), wr)
        err = np.abs(coarse - fine)

        if done_val is None:
            all_a, all_b = pend_a, pend_b
            all_val, all_err, all_l1 = fine, err, l1
        else:
            all_a = np.concatenate([done_a, pend_a])
            all_b = np.concatenate([done_b, pend_b])
            all_val = np.concatenate([done_val, fine], axis=1)
            all_err = np.concatenate([done_err, err], axis=1)
            all_l1 = np.concatenate([done_l1, l1], axis=1)

        scale = all_l1.sum(axis=1)
        tiny = np.finfo(float).tiny
        scale = np.where(scale > 0, scale, tiny)
        if abs_tolerance > 0:
            scale = np.maximum(scale, abs_tolerance / rel_tolerance)
        norm_err = (all_err / scale[:, None]).max(axis=0)
        lengths = all_b - all_a
        total_err = (all_err.sum(axis=1) / scale).max()
        n_final = 2 * n * len(all_a)

        if total_err <= rel_tolerance:
            break
        refine = norm_err > rel_tolerance * lengths / total_len
        # guard against floating point stalls on panels too narrow to split
        refine &= lengths > 64 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)
        if not refine.any() or evaluations + 6 * n * refine.sum() > node_budget:
            raise NonConvergence(
                f"adaptive quadrature reached {evaluations} evaluations with relative "
                f"error {total_err:.3e} > {rel_tolerance:.1e}"
            )
        keep = ~refine
        done_a, done_b = all_a[keep], all_b[keep]
        done_val, done_err, done_l1 = all_val[:, keep], all_err[:, keep], all_l1[:, keep]
        split_a, split_b = all_a[refine], all_b[refine]
        split_mid = 0.5 * (split_a + split_b)
        pend_a = np.concatenate([split_a, split_mid])
        pend_b = np.concatenate([split_mid, split_b])
        if len(done_a) == 0:
            done_val = None

    order = np.argsort(all_a)
    all_a, all_b = all_a[order], all_b[order]
    mid = 0.5 * (all_a + all_b)
    xl, wl = _panel_nodes(all_a, mid, n)
    xr, wr = _panel_nodes(mid, all_b, n)
    nodes = np.stack([xl, xr], axis=1).ravel()
    weights = np.stack([wl, wr], axis=1).ravel()
    value = all_val.sum(axis=1).reshape(shape)
    error = all_err.sum(axis=1).reshape(shape)
    return AdaptiveResult(value, error, all_l1.sum(axis=1).reshape(shape),
                          QuadratureRule(nodes, weights), evaluations)


def _domain(profiles: Sequence[ComplexProfile], spec: QuadratureSpec) -> float:
    if spec.half_width is not None:
        return float(spec.half_width)
    return max(p.extent for p in profiles)


def _check_truncation(f: Callable, half_width: float, result: AdaptiveResult,
                      spec: QuadratureSpec, exact_support: bool) -> None:
    if exact_support:
        return
    edge = np.abs(np.asarray(f(np.array([-half_width, half_width]))))
    edge = edge.reshape(-1, 2).max(axis=1)
    scale = np.atleast_1d(np.abs(result.l1)).ravel()
    bad = edge * half_width > np.maximum(spec.rel_tolerance * np.maximum(scale, np.finfo(float).tiny),
                                         spec.abs_tolerance)
    if np.any(bad & (edge > 0)):
        raise DomainTooSmall(
            f"integrand is {edge.max():.3e} at |x| = {half_width:.4g}; "
            "truncating the real line there is unsafe"
        )


def _exact_support(profiles: Sequence[ComplexProfile], half_width: float) -> bool:
    supports = [p.support for p in profiles if p.support is not None]
    return bool(supports) and min(supports) <= half_width


def integrate(f, spec: QuadratureSpec = DEFAULT_SPEC):
    """Integral of a profile (or any vectorised callable) over the real line.

    A bare callable needs ``spec.half_width``.  Vector-valued integrands
    return an array of integrals.
    """
    if isinstance(f, ComplexProfile):
        profiles = [f]
        half = _domain(profiles, spec)
        bps = f.breakpoints
    else:
        if spec.half_width is None:
            raise ValueError("a bare callable needs spec.half_width")
        profiles, half, bps = [], float(spec.half_width), ()
    res = adaptive_rule(f, -half, half, breakpoints=bps,
                        rel_tolerance=spec.rel_tolerance, node_budget=spec.node_budget,
                        abs_tolerance=spec.abs_tolerance)
    _check_truncation(f, half, res, spec, _exact_support(profiles, half))
    value = res.value
    return complex(value) if np.ndim(value) == 0 else value


def fourier_transform(f: ComplexProfile, k, spec: QuadratureSpec = DEFAULT_SPEC):
    """``int f(x) exp(-2j pi k x) dx`` at a scalar or an array of ``k``."""
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    half = _domain([f], spec)

    def integrand(x):
        return f(x)[None, :] * np.exp(-2j * np.pi * np.multiply.outer(k_arr, x))

    res = adaptive_rule(integrand, -half, half, breakpoints=f.breakpoints,
                        rel_tolerance=spec.rel_tolerance, node_budget=spec.node_budget,
                        abs_tolerance=spec.abs_tolerance)
    _check_truncation(integrand, half, res, spec, _exact_support([f], half))
    if np.ndim(k) == 0:
        return complex(res.value[0])
    return res.value


def transformed(f: ComplexProfile, decay_scale: float,
                spec: QuadratureSpec = DEFAULT_SPEC, label: str = "") -> ComplexProfile:
    """Profile whose values are computed pointwise by :func:`fourier_transform`."""
    return ComplexProfile(lambda k: fourier_transform(f, k, spec), decay_scale, label=label)


def gram_matrix(profiles: Sequence[ComplexProfile], spec: QuadratureSpec = DEFAULT_SPEC):
    """Hermitian table ``G[i, j] = <f_i|f_j> = int conj(f_i) f_j dx``.

    Returns ``(G, rule)``; ``rule`` is the node set on which every pairwise
    product is resolved to tolerance, so further integrals of the same
    family can reuse it.
    """
    profiles = list(profiles)
    m = len(profiles)
    half = _domain(profiles, spec)
    bps = tuple(sorted({b for p in profiles for b in p.breakpoints}))
    iu = np.triu_indices(m)

    def integrand(x):
        vals = np.stack([np.broadcast_to(p(x), x.shape) for p in profiles])
        prods = np.conj(vals)[:, None, :] * vals[None, :, :]
        return prods[iu]

    res = adaptive_rule(integrand, -half, half, breakpoints=bps,
                        rel_tolerance=spec.rel_tolerance, node_budget=spec.node_budget,
                        abs_tolerance=spec.abs_tolerance)
    _check_truncation(integrand, half, res, spec, _exact_support(profiles, half))
    g = np.zeros((m, m), dtype=complex)
    g[iu] = res.value
    g = g + np.conj(np.triu(g, 1)).T
    return g, res.rule


def inner_product(f: ComplexProfile, g: ComplexProfile, spec: QuadratureSpec = DEFAULT_SPEC) -> complex:
    """``<f|g>`` (antilinear in the first argument)."""
    return complex(gram_matrix([f, g], spec)[0][0, 1])


def central_difference(family: Callable[[float], ComplexProfile], s: float,
                       step: float) -> ComplexProfile:
    """d/ds of an s-parameterised profile, Richardson-extrapolated to O(step**4)."""
    if not step > 0:
        raise StepUnderflow("step must be positive")
    if step < 64 * np.finfo(float).eps * max(abs(s), 1.0):
        raise StepUnderflow(f"step {step:g} is below the resolution of s = {s:g}")
    h = step
    fp, fm = family(s + h), family(s - h)
    fp2, fm2 = family(s + h / 2), family(s - h / 2)

    def ev(x):
        d_h = (fp(x) - fm(x)) / (2 * h)
        d_h2 = (fp2(x) - fm2(x)) / h
        return (4 * d_h2 - d_h) / 3

    base = family(s)
    return ComplexProfile(ev, base.decay_scale, base.support, base.breakpoints, base.offset,
                          label=f"d/ds {base.label}".strip())


def sinc(u):
    """Normalised sinc, sin(pi u)/(pi u)."""
    return np.sinc(u)


def gaussian_integral(a: float) -> float:
    """int exp(-a x^2) dx."""
    return math.sqrt(math.pi / a)
