"""Brute-force QFI from the defining SLD equation.

rho_p has rank at most three and d(rho_p)/ds lives in the span of
{psi~_0, psi~_pi, d psi~_0, d psi~_pi, |0>}, so an orthonormal basis of
that span gives an exact finite matrix representation.  The QFI then
comes from the eigen-decomposition of a <= 5x5 Hermitian matrix and shares
nothing with the lemma-based formulas except the profiles themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import DerivativeMismatch, RankCollapse, UnsupportedDerivative
from .numerics import DEFAULT_SPEC, QuadratureSpec, gram_matrix
from .state import TwoSourceState

RANK_TOL = 1e-12
EIG_CUTOFF = 1e-14
KERNEL_TOL = 1e-9

_LABELS = ("psi0", "psi_pi", "dpsi0", "dpsi_pi")


@dataclass(frozen=True)
class ReducedRepresentation:
    """rho and d(rho)/ds in an orthonormal basis of the relevant span.

    ``basis`` holds the orthonormal functions sampled (with sqrt-weights
    folded in) on ``nodes``; the last axis of ``rho`` is the vacuum when
    ``has_vacuum`` is set.
    """

    rho: np.ndarray
    drho: np.ndarray
    basis: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    labels: tuple
    dropped: tuple
    has_vacuum: bool
    gram_residual: float
    fd_discrepancy: float = math.nan
    coords: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.rho.shape[0]

    @property
    def photon_rank(self) -> int:
        k = self.dimension - (1 if self.has_vacuum else 0)
        ev = np.linalg.eigvalsh(self.rho[:k, :k])
        return int(np.sum(ev > EIG_CUTOFF * max(ev.max(), 0) + 0.0)) if k else 0


def _gram_schmidt(cols: np.ndarray, tol: float = RANK_TOL):
    """Modified Gram-Schmidt with one reorthogonalisation pass.

    Returns (Q, R, kept) with cols ~= Q @ R; columns whose residual falls
    below ``tol`` times their own norm add no basis vector.
    """
    n, m = cols.shape
    qs = []
    r = np.zeros((m, m), dtype=complex)
    kept = []
    for j in range(m):
        v = cols[:, j].astype(complex)
        norm0 = np.linalg.norm(v)
        coeff = np.zeros(len(qs), dtype=complex)
        for _ in range(2):
            for k, q in enumerate(qs):
                c = np.vdot(q, v)
                coeff[k] += c
                v = v - c * q
        r[:len(qs), j] = coeff
        nv = np.linalg.norm(v)
        if norm0 == 0 or nv <= tol * norm0:
            continue
        r[len(qs), j] = nv
        qs.append(v / nv)
        kept.append(j)
    q = np.stack(qs, axis=1) if qs else np.zeros((n, 0), dtype=complex)
    return q, r[:len(qs), :], tuple(kept)


def _sample(state: TwoSourceState, nodes: np.ndarray, order) -> np.ndarray:
    funcs = (state.psi0.amplitude, state.psi_pi.amplitude, state.psi0.derivative,
             state.psi_pi.derivative)
    return np.stack([np.broadcast_to(funcs[i](nodes), nodes.shape) for i in order], axis=1)


def _photon_blocks(coords: np.ndarray, order, B: np.ndarray):
    """rho and drho photon blocks from coordinates of the four generating vectors."""
    pos = {lab: k for k, lab in enumerate(order)}
    X = coords[:, [pos[0], pos[1]]]
    Xd = coords[:, [pos[2], pos[3]]]
    rho = X @ B @ X.conj().T
    drho = Xd @ B @ X.conj().T
    drho = drho + drho.conj().T
    return rho, drho


def reduce(state: TwoSourceState, spec: QuadratureSpec = DEFAULT_SPEC, fd_step: float = 1e-3,
           part: str = "full", order=(0, 1, 2, 3), check_derivative: bool = True,
           include_vacuum: bool = True) -> ReducedRepresentation:
    """Exact reduced representation of rho_p (``part='full'``) or rho_p^(1) (``'single'``).

    ``order`` permutes the generating vectors before orthogonalisation;
    ``fd_step`` is the finite-difference step (relative to the separation
    scale) for the independent check on d(rho)/ds.
    """
    if part not in ("full", "single"):
        raise ValueError("part must be 'full' or 'single'")
    order = tuple(order)
    B = np.asarray(state.coeffs.entries, dtype=complex)
    _, rule = gram_matrix([state.psi0.amplitude, state.psi_pi.amplitude, state.psi0.derivative,
                           state.psi_pi.derivative], spec)
    sw = np.sqrt(rule.weights)
    cols = _sample(state, rule.nodes, order) * sw[:, None]
    Q, Rm, kept = _gram_schmidt(cols)
    dropped = tuple(_LABELS[order[j]] for j in range(4) if j not in kept)
    if Q.shape[1] == 0 or not np.any(np.abs(Rm[:, [order.index(0), order.index(1)]]) > 0):
        raise RankCollapse("no photon component survives: the state is pure vacuum")

    rho_ph, drho_ph = _photon_blocks(Rm, order, B)
    total = float(np.real(np.trace(rho_ph)))
    if total <= 0:
        raise RankCollapse("photon block carries no weight (Re(gamma) = -1 at s = 0)")
    dtotal = float(np.real(np.trace(drho_ph)))

    if part == "single":
        rho = rho_ph / total
        drho = drho_ph / total - rho_ph * dtotal / total ** 2
        has_vac = False
    elif include_vacuum:
        k = rho_ph.shape[0]
        rho = np.zeros((k + 1, k + 1), dtype=complex)
        drho = np.zeros_like(rho)
        rho[:k, :k], drho[:k, :k] = rho_ph, drho_ph
        rho[k, k] = 1.0 - total
        drho[k, k] = -dtotal
        has_vac = True
    else:
        rho, drho, has_vac = rho_ph, drho_ph, False

    gram_residual = float(np.max(np.abs(Q.conj().T @ Q - np.eye(Q.shape[1])))) if Q.size else 0.0

    fd_disc = math.nan
    if check_derivative:
        h = fd_step * max(state.separation, 1.0)
        s0 = state.separation
        if s0 - h < 0:
            h = s0 / 2 if s0 > 0 else 0.0
        if h > 0:
            def projected(s):
                st = state.at(s, spec)
                c = Q.conj().T @ (_sample(st, rule.nodes, order) * sw[:, None])
                pos = {lab: k for k, lab in enumerate(order)}
                X = c[:, [pos[0], pos[1]]]
                return X @ B @ X.conj().T

            d_h = (projected(s0 + h) - projected(s0 - h)) / (2 * h)
            d_h2 = (projected(s0 + h / 2) - projected(s0 - h / 2)) / h
            fd = (4 * d_h2 - d_h) / 3
            scale = max(np.max(np.abs(drho_ph)), np.finfo(float).tiny)
            fd_disc = float(np.max(np.abs(fd - drho_ph)) / scale)
            if fd_disc > 1e-6:
                raise DerivativeMismatch(
                    f"analytic d(rho)/ds disagrees with finite differences by {fd_disc:.2e}")

    labels = tuple(_LABELS[order[j]] for j in kept) + (("vacuum",) if has_vac else ())
    # coordinates of psi~_0, psi~_pi, d psi~_0, d psi~_pi in the basis, canonical order
    coords = Rm[:, [order.index(k) for k in range(4)]]
    return ReducedRepresentation(rho, drho, Q, rule.nodes, rule.weights, labels, dropped,
                                 has_vac, gram_residual, fd_disc, coords)


def _blocks(rho: np.ndarray, drho: np.ndarray):
    adj = (np.abs(rho) > 0) | (np.abs(drho) > 0)
    n, labels = connected_components(adj.astype(int), directed=False)
    return [np.flatnonzero(labels == b) for b in range(n)]


def qfi_spectral(rep: ReducedRepresentation | tuple):
    """F = sum_{l_i + l_j > 0} 2 |<i|drho|j>|^2 / (l_i + l_j) and the SLD.

    Accepts a :class:`ReducedRepresentation` or a bare ``(rho, drho)`` pair.
    rho is split into its exactly decoupled blocks (photon / vacuum) before
    diagonalising, so eigenvalues of very different magnitude do not
    contaminate each other; the support cutoff is relative to each block.
    """
    if isinstance(rep, ReducedRepresentation):
        rho, drho = rep.rho, rep.drho
    else:
        rho, drho = (np.asarray(m, dtype=complex) for m in rep)
    dim = rho.shape[0]
    lam_full = np.zeros((dim, dim), dtype=complex)
    F = 0.0
    dscale = max(np.max(np.abs(drho)), np.finfo(float).tiny)
    for idx in _blocks(rho, drho):
        r = rho[np.ix_(idx, idx)]
        d = drho[np.ix_(idx, idx)]
        lam, U = np.linalg.eigh(r)
        D = U.conj().T @ d @ U
        cut = EIG_CUTOFF * max(float(np.sum(np.abs(lam))), np.finfo(float).tiny)
        support = lam > cut
        pair = support[:, None] | support[None, :]
        denom = lam[:, None] + lam[None, :]
        ker = ~pair
        if np.any(ker) and np.max(np.abs(D[ker])) > KERNEL_TOL * dscale:
            raise UnsupportedDerivative(
                "d(rho)/ds has weight inside the kernel of rho: "
                f"{np.max(np.abs(D[ker])):.3e}")
        L = np.zeros_like(D)
        L[pair] = 2 * D[pair] / denom[pair]
        F += float(np.sum(np.abs(D[pair]) ** 2 * 2 / denom[pair]))
        lam_full[np.ix_(idx, idx)] = U @ L @ U.conj().T
    resid = drho - 0.5 * (lam_full @ rho + rho @ lam_full)
    if np.max(np.abs(resid)) > 1e-9 * dscale:
        raise UnsupportedDerivative(f"SLD equation residual {np.max(np.abs(resid)):.3e}")
    return F, lam_full


def ansatz_sld(rep: ReducedRepresentation, weights) -> np.ndarray:
    """Lambda = 2 sum_i |dphi_i><dphi_i| / <phi_i|dphi_i> on the photon block.

    Only valid for an s-independent coefficient matrix, i.e. the photon
    block of rho_p without the vacuum axis.  ``weights`` is diag(B); branches
    with zero weight are left out of the sum.
    """
    if rep.has_vacuum or rep.coords is None:
        raise ValueError("the ansatz applies to the photon block (include_vacuum=False, part='full')")
    X, Xd = rep.coords[:, :2], rep.coords[:, 2:]
    lam = np.zeros((rep.dimension, rep.dimension), dtype=complex)
    for i in range(2):
        if weights[i] == 0:
            continue
        overlap = np.vdot(X[:, i], Xd[:, i])
        if overlap == 0:
            if np.any(Xd[:, i]):
                raise ZeroDivisionError(f"<phi_{i}|dphi_{i}> vanishes; the ansatz is undefined")
            continue
        lam += 2 * np.outer(Xd[:, i], Xd[:, i].conj()) / overlap
    return lam


def sld_residual(rho: np.ndarray, drho: np.ndarray, sld: np.ndarray) -> float:
    """max |drho - (L rho + rho L)/2| relative to max |drho|."""
    resid = drho - 0.5 * (sld @ rho + rho @ sld)
    return float(np.max(np.abs(resid)) / max(np.max(np.abs(drho)), np.finfo(float).tiny))


def oracle_qfi(state: TwoSourceState, spec: QuadratureSpec = DEFAULT_SPEC, **kw) -> dict:
    """Spectral QFI of rho_p and of its single-photon part."""
    full, _ = qfi_spectral(reduce(state, spec, part="full", **kw))
    single, _ = qfi_spectral(reduce(state, spec, part="single", **kw))
    return {"full": full, "single": single}
