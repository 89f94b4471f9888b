import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twosource.errors import InvalidCoherence
from twosource.numerics import gram_matrix
from twosource.optics import Aperture, SourcePair
from twosource.qfi import lemma_assumptions
from twosource.state import (CoefficientMatrix, assemble_state, branch_weights,
                             build_unnormalized_state, coherence_angle)

G1 = Aperture.gaussian(1.0)


def test_antisymmetric_branch_vanishes_at_zero_separation():
    assert build_unnormalized_state(G1, 0.0, math.pi, 0.0, True).norm2() == 0.0


def test_symmetric_norm_at_zero_separation():
    n = build_unnormalized_state(G1, 0.0, 0.0, 0.0, True).norm2()
    assert n == pytest.approx(1 / math.sqrt(8 * math.pi), rel=1e-12)


def test_width_needs_point_mode():
    with pytest.raises(ValueError):
        build_unnormalized_state(G1, 1.0, 0.0, 0.0, False)
    with pytest.raises(ValueError):
        build_unnormalized_state(G1, -1.0, 0.0, 0.1, False)


@pytest.mark.parametrize("point", [True, False])
def test_branch_decomposition(point):
    phi = math.pi / 3
    d = 0.0 if point else 0.05
    x = np.linspace(-2, 2, 81)
    mk = lambda p: build_unnormalized_state(G1, 0.9, p, d, point).amplitude(x)
    lhs = mk(phi)
    rhs = math.cos(phi / 2) * mk(0.0) + math.sin(phi / 2) * mk(math.pi)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_sinc_envelope():
    x = np.linspace(-2, 2, 9)
    st_ = build_unnormalized_state(G1, 0.9, 0.4, 0.3, False)
    ref = G1(x) * np.sinc(0.3 * x) * np.cos(np.pi * x * 0.9 + 0.2)
    assert np.allclose(st_.amplitude(x), ref, rtol=0, atol=1e-15)


@pytest.mark.parametrize("gamma,chi", [(0.5, math.pi / 3), (1j, math.pi / 2), (-1, math.pi), (1, 0.0)])
def test_coherence_angle(gamma, chi):
    assert coherence_angle(gamma) == pytest.approx(chi, abs=1e-15)


def test_coherence_angle_rejects_superunit():
    with pytest.raises(InvalidCoherence):
        coherence_angle(1.1)


def test_coherent_limit_has_single_branch():
    st_ = assemble_state(G1, SourcePair(1.0, 1e-3, 1.0))
    assert st_.p2 == 0.0 and st_.p1 > 0


def test_incoherent_branches_balance():
    st_ = assemble_state(G1, SourcePair(1.0, 1e-3, 0.0, 0.01))
    assert st_.p1 == pytest.approx(st_.p2, rel=1e-12)


def test_coefficient_matrix_entries():
    d, p = 1e-3, 0.01
    b = CoefficientMatrix.build(0.6 + 0.3j, d, p)
    assert np.allclose(b.entries, d * p / math.pi * np.array([[1.6, 0.3], [0.3, 0.4]]), rtol=1e-15, atol=0)
    assert b.trace == pytest.approx(2 * b.scale, rel=1e-15)
    assert b.determinant == pytest.approx(b.scale ** 2 * (1 - abs(0.6 + 0.3j) ** 2), rel=1e-10)
    assert not b.entries.flags.writeable


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(-math.pi, math.pi))
def test_coefficient_matrix_psd(r, phi):
    b = CoefficientMatrix.build(r * complex(math.cos(phi), math.sin(phi)), 1e-3, 0.01)
    assert np.all(np.linalg.eigvalsh(b.entries) >= -1e-18)


def _table(ap, s, d, point):
    a = build_unnormalized_state(ap, s, 0.0, d, point)
    b = build_unnormalized_state(ap, s, math.pi, d, point)
    return gram_matrix([a.amplitude, b.amplitude, a.derivative, b.derivative])[0]


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("point", [True, False])
def test_lemma_preconditions(seed, point):
    rng = np.random.default_rng(seed)
    ap = G1 if seed == 0 else Aperture.random_mixture(rng)
    table = _table(ap, 0.3 + seed, 0.0 if point else 0.02, point)
    assert max(lemma_assumptions(table).values()) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.0, 4.0))
def test_norm_mixing_identity(phi, s):
    n = lambda p: build_unnormalized_state(G1, s, p, 0.0, True).norm2()
    mixed = math.cos(phi / 2) ** 2 * n(0.0) + math.sin(phi / 2) ** 2 * n(math.pi)
    assert n(phi) == pytest.approx(mixed, rel=1e-10, abs=1e-14)


def test_derivative_mixing():
    for re_g in (-0.7, 0.0, 0.4):
        c, sn = branch_weights(re_g)
        chi = coherence_angle(re_g)
        x = np.linspace(-2, 2, 41)
        d = lambda p: build_unnormalized_state(G1, 1.3, p, 0.0, True).derivative(x)
        assert np.max(np.abs(d(chi) - (c * d(0.0) + sn * d(math.pi)))) < 1e-10


@pytest.mark.parametrize("gamma", [0.0, 0.5, -0.98, 0.3 + 0.6j, 1j, -1.0])
def test_state_probabilities(gamma):
    d, pem = 1e-3, 0.02
    st_ = assemble_state(G1, SourcePair(0.8, d, gamma, pem))
    assert abs(st_.p1 + st_.p2 + st_.p3 - 1) <= 2e-16
    assert min(st_.p1, st_.p2, st_.p3) >= 0
    c, sn = branch_weights(complex(gamma).real)
    table = _table(G1, 0.8, d, False)
    n_chi = (c * c * table[0, 0] + sn * sn * table[1, 1]).real
    assert st_.photon_probability == pytest.approx(pem * 2 / math.pi * d * n_chi, rel=1e-10)
    assert math.cos(st_.chi) == pytest.approx(complex(gamma).real, abs=1e-15)
    # the single-photon part has unit trace
    w = st_.single_photon_weights()
    assert np.real(np.trace(w @ table[:2, :2])) == pytest.approx(1.0, rel=1e-10)


def test_state_at_other_separation():
    st_ = assemble_state(G1, SourcePair(0.8, 1e-3, 0.3))
    moved = st_.at(1.5)
    assert moved.separation == 1.5 and moved.gamma == st_.gamma
    assert moved.p1 == pytest.approx(assemble_state(G1, SourcePair(1.5, 1e-3, 0.3)).p1, rel=1e-15)
