import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twosource.errors import InvalidAperture, InvalidCoherence, InvalidSource
from twosource.numerics import ComplexProfile, integrate
from twosource.optics import (Aperture, SourcePair, object_field, branch_transmission, propagate_4f,
                              pupil_field, transmission_probability)

SQRT8PI = math.sqrt(8 * math.pi)


def power(prof):
    return integrate(ComplexProfile(lambda x: np.abs(prof(x)) ** 2, prof.decay_scale, prof.support,
                                    prof.breakpoints, prof.offset)).real


def test_pupil_dc_values():
    src = SourcePair(1.0, 0.01)
    assert pupil_field(src, 0.0)(np.array([0.0]))[0] == pytest.approx(0.02, rel=1e-15)
    assert abs(pupil_field(src, math.pi)(np.array([0.0]))[0]) < 1e-17


def test_pupil_is_transform_of_object():
    src = SourcePair(1.2, 0.05, 0.3j)
    fields = propagate_4f(src, 0.7, Aperture.gaussian(1.0))
    from twosource.numerics import fourier_transform
    k = np.linspace(-4, 4, 17)
    assert np.max(np.abs(fourier_transform(fields.object, k) - fields.pupil(k))) < 1e-12


def test_final_lens_is_unitary():
    src = SourcePair(1.0, 0.05, 0.5)
    f = propagate_4f(src, 0.0, Aperture.gaussian(1.0))
    post = power(f.post_aperture)
    assert power(f.image) / post == pytest.approx(1.0, abs=1e-9)
    assert post <= power(f.object)


def test_object_power_is_two_delta():
    src = SourcePair(0.8, 0.02)
    assert power(object_field(src, 1.1)) == pytest.approx(0.04, rel=1e-10)


def test_gaussian_cpsf_width():
    ap = Aperture.gaussian(1.0)
    u = ap.cpsf()
    assert (abs(u(1.0)) / abs(u(0.0))) ** 2 == pytest.approx(math.exp(-0.5), rel=1e-14)
    mass = power(u)
    second = integrate(ComplexProfile(lambda x: x * x * np.abs(u(x)) ** 2, u.decay_scale)).real
    assert math.sqrt(second / mass) == pytest.approx(1.0, rel=1e-10)
    assert mass == pytest.approx(1 / SQRT8PI, rel=1e-10)


def test_gaussian_cpsf_matches_quadrature():
    ap = Aperture.gaussian(0.7)
    from twosource.numerics import fourier_transform
    x = np.linspace(-3, 3, 13)
    assert np.max(np.abs(ap.cpsf()(x) - fourier_transform(ap.profile, x))) < 1e-13
    du = ap.cpsf_slope()(x)
    h = 1e-5
    fd = (ap.cpsf()(x + h) - ap.cpsf()(x - h)) / (2 * h)
    assert np.max(np.abs(du - fd)) < 1e-8


def test_hard_edge_cpsf_peaks_at_zero():
    ap = Aperture.hard_edge(0.5)
    u = ap.cpsf()
    x = np.linspace(-5, 5, 201)
    vals = u(x)
    assert np.isrealobj(vals) or np.max(np.abs(np.imag(vals))) == 0
    assert u(0.0) == pytest.approx(1.0) and np.all(np.abs(vals) <= u(0.0) + 1e-15)
    from twosource.numerics import fourier_transform
    assert np.max(np.abs(fourier_transform(ap.profile, x[::20]) - u(x[::20]))) < 1e-12
    h = 1e-5
    xs = np.array([-1.3, -1e-9, 0.0, 0.4, 2.2])
    fd = (u(xs + h) - u(xs - h)) / (2 * h)
    assert np.max(np.abs(ap.cpsf_slope()(xs) - fd)) < 1e-8


def test_even_aperture_has_real_cpsf():
    x = np.linspace(-1, 1, 41)
    ap = Aperture.from_samples(x, 1 - 0.8 * x * x)
    u = ap.cpsf()
    vals = np.asarray(u(np.linspace(-3, 3, 25)))
    assert np.max(np.abs(vals.imag)) < 1e-12


def test_identity_is_lossless():
    src = SourcePair(1.0, 0.01)
    assert transmission_probability(src, 0.3, Aperture.identity()) == 1.0


def test_incoherent_transmission_is_flat():
    ap = Aperture.gaussian(1.0)
    d = 1e-3
    vals = [transmission_probability(SourcePair(s, d), math.pi / 2, ap) for s in (0.01, 0.5, 1, 2.5, 5)]
    assert vals[0] == pytest.approx(d / SQRT8PI, rel=1e-6)
    assert max(vals) / min(vals) - 1 <= 1e-6


def test_symmetric_branch_passes_more():
    ap = Aperture.gaussian(1.0)
    src = SourcePair(0.5, 1e-3)
    assert transmission_probability(src, 0.0, ap) > transmission_probability(src, math.pi, ap)


def test_conventions_differ_by_pi():
    ap = Aperture.gaussian(1.0)
    src = SourcePair(0.7, 1e-3)
    phys = transmission_probability(src, 0.4, ap)
    assert branch_transmission(ap, 0.7, 0.4, 1e-3, convention="physical") == pytest.approx(phys, rel=1e-10)
    assert branch_transmission(ap, 0.7, 0.4, 1e-3) * math.pi == pytest.approx(phys, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-math.pi, math.pi), st.floats(0.3, 3.0))
def test_transmission_properties(s, phase, sigma):
    d = s / 20
    src = SourcePair(s, d)
    a1, a2 = Aperture.gaussian(sigma), Aperture.gaussian(2 * sigma)  # a2 <= a1 pointwise
    p1 = transmission_probability(src, phase, a1)
    p2 = transmission_probability(src, phase, a2)
    assert 0 <= p2 <= p1 <= 1
    assert transmission_probability(src, -phase, a1) == pytest.approx(p1, rel=1e-10)


def test_finite_width_converges_quadratically():
    ap = Aperture.gaussian(1.0)
    from twosource.qfi import qfi_point_sources
    # point-source limit of p_phys / delta in the physical convention
    limit = qfi_point_sources(ap, 1.0, complex(math.cos(0.6), 0.0), convention="physical").transmission
    errs = []
    for d in (0.04, 0.02, 0.01):
        errs.append(abs(transmission_probability(SourcePair(1.0, d), 0.6, ap) / d - limit))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_aperture_validation(tmp_path):
    with pytest.raises(InvalidAperture):
        Aperture.gaussian(-1.0)
    with pytest.raises(InvalidAperture):
        Aperture.from_samples([-1, 0, 2], [0.5, 1, 0.2])  # not even
    with pytest.raises(InvalidAperture):
        Aperture.from_samples([-1, 0, 1], [0.5, 1.5, 0.5])  # amplifies
    with pytest.raises(InvalidAperture):
        Aperture.gaussian_mixture([0.7, 0.6], [1.0, 2.0])
    path = tmp_path / "ap.txt"
    path.write_text("-1 0\n-0.5 0.75\n0 1\n0.5 0.75\n1 0\n")
    ap = Aperture.from_file(path)
    assert ap(np.array([0.25]))[0] == pytest.approx(0.875)
    assert ap(np.array([3.0]))[0] == 0.0
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n4 5 6\n")
    with pytest.raises(InvalidAperture):
        Aperture.from_file(bad)


def test_source_validation():
    with pytest.raises(InvalidSource):
        SourcePair(0.0, 0.01)
    with pytest.raises(InvalidSource):
        SourcePair(0.05, 0.01)  # s < 10 delta
    with pytest.raises(InvalidSource):
        SourcePair(1.0, 0.01, 0.0, emission_prob=0.5)
    with pytest.raises(InvalidCoherence):
        SourcePair(1.0, 0.01, 0.9 + 0.9j)
    src = SourcePair(1.0, 0.01, -0.5j)
    assert src.r == pytest.approx(0.5) and src.phase == pytest.approx(-math.pi / 2)
