import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dwt.dispersion import (
    DispersionLaw,
    LawKind,
    frequency,
    make_mode,
    parse_law,
    spectral_domain,
    wavenumber,
)
from dwt.errors import DomainError, UnsupportedLawError

GRAV = DispersionLaw.gravity_surface_2d()
DEEP = DispersionLaw.deep_water_1d()
INV = DispersionLaw.inverse_root_2d()


def test_frequency_examples():
    assert frequency(GRAV, (3, 4)) == pytest.approx(math.sqrt(5), rel=1e-14)
    assert frequency(DEEP, 4) == 2.0
    assert frequency(INV, (1, 2)) == pytest.approx(1 / math.sqrt(5), rel=1e-14)


def test_wavenumber_examples():
    assert wavenumber(DEEP, 2.0) == 4.0
    assert wavenumber(DEEP, 1.0) == 1.0
    assert wavenumber(DispersionLaw.power_law(1.0, Fraction(1, 2)), 3.0) == pytest.approx(9.0, rel=1e-14)


def test_zero_wavevector_rejected():
    with pytest.raises(DomainError):
        frequency(GRAV, (0, 0))
    with pytest.raises(DomainError):
        frequency(DEEP, 0)


def test_wrong_dimension_rejected():
    with pytest.raises(DomainError):
        frequency(GRAV, 3)
    with pytest.raises(DomainError):
        frequency(DEEP, (1, 2))


def test_nonpositive_frequency_rejected():
    with pytest.raises(DomainError):
        wavenumber(DEEP, 0.0)


def test_beta_zero_is_not_invertible():
    flat = DispersionLaw.power_law(2.0, 0, 1)
    with pytest.raises(UnsupportedLawError):
        wavenumber(flat, 2.0)


def test_bad_constants():
    with pytest.raises(DomainError):
        DispersionLaw.power_law(-1.0, Fraction(1, 2))
    with pytest.raises(DomainError):
        DispersionLaw.power_law(1.0, Fraction(1, 2), dim=3)


@given(st.integers(1, 10**6))
@settings(max_examples=1000, deadline=None)
def test_round_trip_scalar_k(k):
    for law in (DEEP, DispersionLaw.power_law(2.5, Fraction(3, 7)), DispersionLaw.power_law(0.5, Fraction(-2, 3))):
        assert wavenumber(law, frequency(law, k)) == pytest.approx(k, rel=1e-12)


@given(st.integers(-200, 200), st.integers(-200, 200))
def test_named_laws_are_power_laws(m, n):
    if m == 0 and n == 0:
        return
    kmod = math.hypot(m, n)
    general = DispersionLaw.power_law(1.0, Fraction(1, 2), dim=2)
    assert frequency(GRAV, (m, n)) == pytest.approx(frequency(general, (m, n)), rel=1e-12)
    assert frequency(GRAV, (m, n)) == pytest.approx(kmod**0.5, rel=1e-12)
    inv = DispersionLaw.power_law(1.0, Fraction(-1), dim=2)
    assert frequency(INV, (m, n)) == pytest.approx(frequency(inv, (m, n)), rel=1e-12)
    assert wavenumber(GRAV, frequency(GRAV, (m, n))) == pytest.approx(kmod, rel=1e-12)


@given(st.integers(1, 10**5))
def test_deep_water_matches_power_law(k):
    general = DispersionLaw.power_law(1.0, Fraction(1, 2), dim=1)
    assert frequency(DEEP, k) == pytest.approx(frequency(general, k), rel=1e-12)


@given(st.fractions(min_value=Fraction(1, 10), max_value=3).filter(lambda b: b > 0), st.integers(1, 10**4))
def test_monotone_for_positive_beta(beta, k):
    law = DispersionLaw.power_law(1.3, beta)
    assert frequency(law, k + 1) > frequency(law, k) > 0


def test_mode_frequency_matches_radical():
    for law in (GRAV, INV, DEEP):
        for mode in spectral_domain(law, 12):
            rad = mode.radical
            exact = rad.gamma * rad.q ** (1.0 / rad.r)
            expected = exact if law.radical_exponent > 0 else 1.0 / exact
            assert mode.freq == pytest.approx(expected, rel=1e-12)


def test_spectral_domain_shapes():
    assert len(spectral_domain(GRAV, 50)) == 2500
    assert len(spectral_domain(GRAV, 3, full_lattice=True)) == 48
    assert [m.wavevector for m in spectral_domain(DEEP, 3)] == [(1,), (2,), (3,)]
    modes = spectral_domain(GRAV, 5)
    assert modes == sorted(modes)
    with pytest.raises(DomainError):
        spectral_domain(GRAV, 0)


def test_non_radical_law_modes_have_no_radical():
    law = DispersionLaw.power_law(1.0, Fraction(1, 3))
    assert make_mode(law, 8).radical is None
    assert make_mode(law, 8).freq == pytest.approx(2.0)


def test_parse_law():
    assert parse_law("grav2d") == GRAV
    assert parse_law(" DeepWater ") == DEEP
    law = parse_law("power:c=2,beta=1/3,dim=2")
    assert law.kind is LawKind.POWER_LAW and law.c == 2.0 and law.beta == Fraction(1, 3) and law.dim == 2
    assert parse_law(law.name) == law
    for bad in ("nope", "grav2d:c=1", "power:gamma=2"):
        with pytest.raises(ValueError):
            parse_law(bad)


def test_root_order():
    assert GRAV.root_order == 4
    assert INV.root_order == 2
    assert DEEP.root_order == 2
    with pytest.raises(UnsupportedLawError):
        DispersionLaw.power_law(1.0, Fraction(1, 3)).root_order
    assert np.isclose(frequency(DispersionLaw.power_law(1.0, Fraction(1, 2), 2), (3, 4)), math.sqrt(5))
