import math

import numpy as np
import pytest

from subshift_spectra import (
    IntervalSet,
    Periodic,
    Potential,
    apriori_envelope,
    cone_certificate,
    discriminant,
    periodic_bands,
    spectrum_approximant,
)
from subshift_spectra.bands import discriminant_curve
from subshift_spectra.words import FIBONACCI

from conftest import rng


def test_discriminant_examples(pot04, pot_free):
    assert discriminant("a", pot_free, 1.0) == 1.0
    # w = "ab", v = {0, 4}: trace is E^2 - 4E - 2
    for e in (-1.0, 0.0, 2.0, 5.0):
        assert discriminant("ab", pot04, e) == e * e - 4 * e - 2
    assert discriminant("ab", pot04, 0.0) == -2.0
    # free two-site word at E=0: 2 cos(2 * pi/2) = -2
    assert discriminant("aa", pot_free, 0.0) == -2.0


def test_free_laplacian_bands_all_periods(pot_free):
    for q in range(1, 33):
        bands = periodic_bands("a" * q, pot_free)
        assert len(bands) == 1
        (lo, hi), = bands.intervals
        assert abs(lo + 2.0) <= 1e-9 and abs(hi - 2.0) <= 1e-9
        assert abs(bands.measure - 4.0) <= 1e-9


def test_single_site_band_is_shifted_interval():
    for c in (-1.5, 0.0, 0.7, 8.0):
        bands = periodic_bands("a", Potential({"a": c}))
        assert bands.intervals == ((c - 2.0, c + 2.0),)


def test_two_letter_band_oracle(pot04):
    # quadratic-root oracle: E^2-4E-2 = +-2 at {2-2sqrt2, 0, 4, 2+2sqrt2}
    bands = periodic_bands("ab", pot04)
    expected = [2 - 2 * math.sqrt(2), 0.0, 4.0, 2 + 2 * math.sqrt(2)]
    got = [x for pair in bands.intervals for x in pair]
    assert len(got) == 4
    for g, e in zip(got, expected):
        assert abs(g - e) <= 1e-9
    assert abs(bands.measure - (4 * math.sqrt(2) - 4)) <= 1e-9


def test_discriminant_sign_pattern():
    # |D| <= 2 inside bands (16 interior probes per band), >= 2 outside
    pot = Potential({"a": 0.0, "b": 3.0})
    g = rng(17)
    words = ["ab", "aab", "abab", "aabba", "babab"]
    for word in words:
        bands = periodic_bands(word, pot)
        for lo, hi in bands:
            inner = np.linspace(lo, hi, 18)[1:-1]
            assert np.all(np.abs(discriminant_curve(word, pot, inner)) <= 2 + 1e-7)
        outside = IntervalSet.single(-6.0, 9.0).difference(bands.dilate(1e-4))
        for lo, hi in outside:
            probes = np.linspace(lo, hi, 40)
            assert np.all(np.abs(discriminant_curve(word, pot, probes)) >= 2 - 1e-7)


def test_band_cyclic_invariance():
    pot = Potential({"a": 0.0, "b": 3.0})
    g = rng(29)
    for _ in range(10):
        length = int(g.integers(2, 9))
        word = "".join("ab"[int(k)] for k in g.integers(0, 2, length))
        base = periodic_bands(word, pot)
        for shift in range(1, length):
            rotated = periodic_bands(word[shift:] + word[:shift], pot)
            assert len(rotated) == len(base)
            for (lo1, hi1), (lo2, hi2) in zip(base, rotated):
                assert abs(lo1 - lo2) <= 1e-9 and abs(hi1 - hi2) <= 1e-9


def test_periodic_bands_validation(pot04):
    with pytest.raises(ValueError):
        periodic_bands("", pot04)


def test_approximant_periodic_two_letter(pot04):
    approx = spectrum_approximant(Periodic("ab"), pot04, 2, 64)
    union = periodic_bands("ab", pot04).union(periodic_bands("ba", pot04))
    assert approx.intervals == union.intervals
    # trace cyclicity: both factors give the same band set
    ab = periodic_bands("ab", pot04)
    ba = periodic_bands("ba", pot04)
    for (lo1, hi1), (lo2, hi2) in zip(ab, ba):
        assert abs(lo1 - lo2) <= 1e-12 and abs(hi1 - hi2) <= 1e-12


def test_approximant_single_letters():
    lam = 10.0
    pot = Potential({"a": 0.0, "b": lam})
    corpus = Periodic("ab")
    approx = spectrum_approximant(corpus, pot, 1, 64)
    assert approx.intervals == ((-2.0, 2.0), (lam - 2.0, lam + 2.0))


def test_approximant_measure_shrinks_with_factor_length():
    pot = Potential({"a": 0.0, "b": 10.0})
    m1 = spectrum_approximant(FIBONACCI, pot, 1, 512).measure
    m8 = spectrum_approximant(FIBONACCI, pot, 8, 512).measure
    assert m8 < m1


def test_approximant_measure_monotone_over_doublings():
    # desk-scale check on a substitution system: nonincreasing when the
    # factor length doubles
    pot = Potential({"a": 0.0, "b": 10.0})
    measures = [
        spectrum_approximant(FIBONACCI, pot, n, 1024).measure for n in (1, 2, 4, 8, 16)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(measures, measures[1:]))


def test_apriori_envelope_examples():
    env = apriori_envelope(Potential({"a": 0.0, "b": 10.0}), 3.0)
    assert env.intervals == ((-3.0, 3.0), (7.0, 13.0))
    assert env.measure == 12.0
    merged = apriori_envelope(Potential({"a": 0.0, "b": 4.0}), 3.0)
    assert merged.intervals == ((-3.0, 7.0),)
    assert merged.measure == 10.0
    with pytest.raises(ValueError):
        apriori_envelope(Potential({"a": 0.0}), 0.0)


def test_cone_certified_outside_envelope():
    lam = 100.0
    pot = Potential({"a": 0.0, "b": lam})
    env = apriori_envelope(pot, 3.0)
    window = IntervalSet.single(-20.0, lam + 20.0)
    for lo, hi in window.difference(env):
        for e in np.linspace(lo + 1e-9, hi - 1e-9, 25):
            assert cone_certificate(float(e), pot, None, 0.5, 3.0)
