import cmath
import dataclasses
import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from sqtransport import analytics as an
from sqtransport import photostatistics as ps
from sqtransport.errors import ThresholdReached, ValidityWarning

mp.mp.dps = 40


def _mp_bracket_absorbing(s):
    s = mp.mpf(s)
    sh, coth = mp.sinh(s), mp.cosh(s) / mp.sinh(s)
    return 3 - (2 * s + coth) / sh - (s * coth - 1) / sh**2 + s / sh**3


def _mp_bracket_amplifying(s):
    s = mp.mpf(s)
    sn, cot = mp.sin(s), mp.cos(s) / mp.sin(s)
    return 3 - (2 * s - cot) / sn + (s * cot - 1) / sn**2 - s / sn**3


def _ratios(**kwargs):
    defaults = dict(s=1.0, l_over_xi=0.1, efficiency=1.0, occupation=1e-3, fano_in=1.0)
    defaults.update(kwargs)
    return an.WaveguideRatios(**defaults)


def test_brackets_match_high_precision_oracle():
    for s in (0.3, 0.7, 1.0, 1.9, 2.6, 5.0):
        assert an.direct_bracket_absorbing(s) == pytest.approx(
            float(_mp_bracket_absorbing(s)), rel=1e-13)
    for s in (0.3, 0.7, 1.0, 1.9, 2.6, 3.0):
        assert an.direct_bracket_amplifying(s) == pytest.approx(
            float(_mp_bracket_amplifying(s)), rel=1e-12)


def test_direct_absorbing_fixture_s1():
    # high-precision evaluation of the full average at s=1, F_in=1, d=1, f=1e-3
    got = an.fano_direct_absorbing_avg(_ratios(s=1.0))
    expected = 1 + 0.5e-3 * float(_mp_bracket_absorbing(1))
    assert got == pytest.approx(expected, rel=1e-14)


def test_direct_amplifying_fixture_s1():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        got = an.fano_direct_amplifying_avg(
            _ratios(s=1.0, occupation=-1.0, fano_in=0.0))
    assert got == pytest.approx(1.240320867421548528726, rel=1e-14)


def test_direct_trivial_when_coherent_and_cold():
    for s in (0.2, 1.0, 4.0, 11.0):
        got = an.fano_direct_absorbing_avg(_ratios(s=s, occupation=0.0, fano_in=1.0))
        assert got == 1.0
    got = an.fano_direct_amplifying_avg(_ratios(s=1.5, occupation=0.0, fano_in=1.0))
    assert got == 1.0


def test_universal_absorbing_limit():
    for s in (12.0, 14.0, 20.0):
        for fano_in in np.linspace(0.0, 3.0, 7):
            w = _ratios(s=s, l_over_xi=0.01, fano_in=float(fano_in))
            assert abs(an.fano_direct_absorbing_avg(w) - 1.0015) < 1e-6


def test_strong_absorption_forgets_input_state():
    low = an.fano_direct_absorbing_avg(_ratios(s=12.0, fano_in=0.0))
    high = an.fano_direct_absorbing_avg(_ratios(s=12.0, fano_in=3.0))
    assert abs(high - low) < 1e-5


def test_threshold_divergence_and_error():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        near = an.fano_direct_amplifying_avg(
            _ratios(s=math.pi - 1e-3, occupation=-1.0, fano_in=1.0))
    assert near > 1e3
    for s in (math.pi, 3.5):
        with pytest.raises(ThresholdReached):
            an.fano_direct_amplifying_avg(_ratios(s=s, occupation=-1.0, fano_in=1.0))
        with pytest.raises(ThresholdReached):
            an.fano_homo_min_amplifying_avg(
                _ratios(s=s, occupation=-1.0, fano_in=None, rho=0.5,
                        coupling=0.5, n_modes=10))


def test_monotone_divergence_beyond_turning_point():
    # locate the minimum of the amplifying average numerically, then require
    # monotone growth from there to the threshold
    for fano_in in (0.0, 1.0, 3.0):
        grid = np.linspace(0.3, math.pi - 1e-4, 600)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            values = [an.fano_direct_amplifying_avg(
                _ratios(s=float(s), occupation=-1.0, fano_in=fano_in)) for s in grid]
        turning = int(np.argmin(values))
        tail = values[turning:]
        assert all(b > a for a, b in zip(tail, tail[1:]))


def test_analytic_continuation_absorbing_to_amplifying():
    rng = np.random.default_rng(50)
    for s in rng.uniform(0.2, 3.0, 20):
        sh = cmath.sinh(1j * s)
        coth = cmath.cosh(1j * s) / sh
        rotated = (3 - (2j * s + coth) / sh - (1j * s * coth - 1) / sh**2
                   + 1j * s / sh**3)
        assert abs(rotated.imag) < 1e-12
        assert rotated.real == pytest.approx(an.direct_bracket_amplifying(float(s)),
                                             rel=1e-10)


def test_homodyne_min_fixtures():
    w = an.WaveguideRatios(s=1.0, l_over_xi=0.1, efficiency=1.0, occupation=1e-3,
                           rho=0.5, coupling=0.5, n_modes=10)
    assert an.fano_homo_min_absorbing_avg(w) == pytest.approx(
        0.9967026415035652187699, rel=1e-14)
    assert an.fano_homo_fixed_phase_avg(w) == pytest.approx(
        1.003369308170231885437, rel=1e-14)


def test_homodyne_trivial_cases():
    w = an.WaveguideRatios(s=0.8, l_over_xi=0.1, efficiency=0.9, occupation=0.0,
                           rho=0.0, coupling=0.4, n_modes=12)
    assert an.fano_homo_min_absorbing_avg(w) == 1.0
    assert an.fano_homo_fixed_phase_avg(w) == 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        assert an.fano_homo_min_amplifying_avg(dataclasses.replace(w, s=1.0)) == 1.0


def test_homodyne_amplifying_inverted_thermal_term_identity():
    # at f = -1 the thermal bracket cotan s - 1/sin s equals -tan(s/2)
    for s in (0.4, 1.0, 2.2, 3.0):
        w = an.WaveguideRatios(s=s, l_over_xi=0.1, efficiency=1.0, occupation=-1.0,
                               rho=0.0, coupling=0.5, n_modes=10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            got = an.fano_homo_min_amplifying_avg(w)
        front = 8 * 0.1 * 1.0 * 0.5 / 3.0
        assert got == pytest.approx(1 + front * math.tan(s / 2), rel=1e-12)


def test_fixed_phase_never_below_minimum():
    # empirical scan; the difference is front * sinh(rho) (sinh(rho)+exp(-rho)) >= 0
    violations = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for rho in np.linspace(0.0, 1.5, 7):
            for s in np.linspace(0.2, 3.0, 12):
                w = an.WaveguideRatios(s=float(s), l_over_xi=0.1, efficiency=1.0,
                                       occupation=1e-3, rho=float(rho), coupling=0.5,
                                       n_modes=10)
                if (an.fano_homo_fixed_phase_avg(w)
                        < an.fano_homo_min_absorbing_avg(w) - 1e-14):
                    violations.append((rho, s, "absorbing"))
                if s < math.pi:
                    wa = dataclasses.replace(w, occupation=-1.0)
                    if (an.fano_homo_fixed_phase_avg(wa, amplifying=True)
                            < an.fano_homo_min_amplifying_avg(wa) - 1e-14):
                        violations.append((rho, s, "amplifying"))
    assert violations == []


def test_zero_length_limits():
    state = ps.SqueezedInput(0.8, 1.0, 0.4, incident_mode=2)
    same = ps.DetectionConfig(1.0, ps.TRANSMISSION, ps.HomodyneConfig(0.5, 2))
    other = ps.DetectionConfig(1.0, ps.TRANSMISSION, ps.HomodyneConfig(0.5, 0))
    direct, homodyne = an.zero_length_limits(state, same)
    fano_in = ps.fano_in_squeezed(state)
    assert direct == pytest.approx(1 + (fano_in - 1), rel=1e-14)
    assert homodyne == pytest.approx(1 - 2 * 0.5 * math.exp(-1.0) * math.sinh(1.0),
                                     rel=1e-14)
    assert an.zero_length_limits(state, other)[1] == 1.0
    coherent = ps.SqueezedInput(2.0, 0.0, 0.0)
    d0, _ = an.zero_length_limits(coherent, ps.DetectionConfig(0.0))
    assert d0 == 1.0
    punched = ps.SqueezedInput(1.0, 0.9, 0.0)
    d1, _ = an.zero_length_limits(punched, ps.DetectionConfig(1.0))
    assert d1 == pytest.approx(ps.fano_in_squeezed(punched), rel=1e-14)


def test_validity_warning_for_short_media():
    with pytest.warns(ValidityWarning):
        an.fano_direct_absorbing_avg(_ratios(s=0.2))
    with warnings.catch_warnings():
        warnings.simplefilter("error", ValidityWarning)
        an.fano_direct_absorbing_avg(_ratios(s=1.0))  # L = 10 l: silent


def test_ratio_validation():
    with pytest.raises(ValueError):
        an.WaveguideRatios(s=0.0, l_over_xi=0.1)
    with pytest.raises(ValueError):
        an.WaveguideRatios(s=1.0, l_over_xi=-0.1)
    with pytest.raises(ValueError):
        an.fano_direct_absorbing_avg(an.WaveguideRatios(s=6.0, l_over_xi=0.1))
