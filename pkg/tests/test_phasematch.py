import math

import numpy as np
import pytest

from ess import materials
from ess.phasematch import (CrystalSpec, SpdcTriplet, conjugate_wavelength,
                            make_triplet, qpm_mismatch, solve_signal,
                            tuning_curve)

PUMP = 532.0


@pytest.fixture(scope="module")
def operating_crystal():
    return CrystalSpec(materials.get_material("ppln_mgo"), 20.0, 7.71, 62.0)


def test_conjugate_wavelength_reference_point():
    # 1/532 - 1/785 inverted; the published rounding is 1651
    assert conjugate_wavelength(532.0, 785.0) == pytest.approx(1650.672, abs=1e-3)


def test_conjugate_degenerate_point():
    assert conjugate_wavelength(532.0, 1064.0) == pytest.approx(1064.0, rel=1e-12)


def test_conjugate_near_pump_limit():
    idler = conjugate_wavelength(532.0, 532.0001)
    assert idler > 1e9
    assert abs(1 / 532.0 - 1 / 532.0001 - 1 / idler) < 1e-9


def test_conjugate_requires_signal_above_pump():
    with pytest.raises(ValueError, match="down-conversion"):
        conjugate_wavelength(532.0, 500.0)
    with pytest.raises(ValueError, match="down-conversion"):
        conjugate_wavelength(532.0, 532.0)


def test_conjugate_involution():
    for signal in (600.0, 785.0, 900.0, 1063.0):
        assert conjugate_wavelength(
            PUMP, conjugate_wavelength(PUMP, signal)) == pytest.approx(signal, abs=1e-9)


def test_triplet_invariants():
    t = make_triplet(532.0, 785.0)
    assert t.signal_nm <= t.idler_nm
    assert abs(1 / t.pump_nm - 1 / t.signal_nm - 1 / t.idler_nm) < 1e-9
    # ordering convention applies regardless of which leg is given
    t2 = make_triplet(532.0, 1650.672)
    assert t2.signal_nm < 800.0
    with pytest.raises(ValueError, match="energy conservation"):
        SpdcTriplet(532.0, 785.0, 1700.0)
    with pytest.raises(ValueError, match="signal"):
        SpdcTriplet(532.0, 1650.672, 785.0)


def test_crystal_spec_validation(ppln):
    with pytest.raises(ValueError, match="odd"):
        CrystalSpec(ppln, 20.0, 7.71, 62.0, qpm_order=2)
    with pytest.raises(ValueError, match="length"):
        CrystalSpec(ppln, -1.0, 7.71, 62.0)
    with pytest.raises(ValueError, match="period"):
        CrystalSpec(ppln, 20.0, 0.0, 62.0)


def test_qpm_mismatch_at_operating_point(operating_crystal):
    dk = qpm_mismatch(operating_crystal, make_triplet(532.0, 785.0))
    assert abs(dk) < 0.05  # Sellmeier-source tolerance


def test_qpm_mismatch_dispersionless_material(flat_material):
    # with n constant and no grating, energy conservation forces dk = 0
    crystal = CrystalSpec(flat_material, 20.0, 1e12, 25.0)
    for signal in (700.0, 785.0, 1000.0):
        dk = qpm_mismatch(crystal, make_triplet(PUMP, signal))
        assert abs(dk) < 1e-9


def test_qpm_mismatch_monotone_near_root(operating_crystal):
    # numeric scan oracle: dk crosses zero monotonically around the solution
    triplet, _ = solve_signal(operating_crystal, PUMP)
    root = triplet.signal_nm
    scan = [qpm_mismatch(operating_crystal, make_triplet(PUMP, root + d))
            for d in np.linspace(-5.0, 5.0, 11)]
    diffs = np.diff(scan)
    assert np.all(diffs > 0) or np.all(diffs < 0)
    assert scan[0] * scan[-1] < 0


def test_solve_signal_residual(operating_crystal):
    triplet, residual = solve_signal(operating_crystal, PUMP)
    assert residual < 1e-6
    assert abs(qpm_mismatch(operating_crystal, triplet)) < 1e-6


def test_tuning_curve_operating_window(ppln):
    crystal = CrystalSpec(ppln, 20.0, 7.71, 62.0)
    points = tuning_curve(crystal, PUMP, 47.0, 77.0, 31)
    assert len(points) == 31
    by_t = {round(pt.temperature_c): pt for pt in points}
    at_62 = by_t[62]
    assert at_62.triplet is not None
    assert at_62.triplet.signal_nm == pytest.approx(785.0, abs=15.0)
    # curve continuity: 1 C steps move the signal by < 5 nm
    signals = [pt.triplet.signal_nm for pt in points if pt.triplet is not None]
    assert len(signals) == 31
    assert np.all(np.abs(np.diff(signals)) < 5.0)
    # every returned point satisfies the solver residual and triplet invariant
    for pt in points:
        assert pt.residual < 1e-6
        assert abs(qpm_mismatch(
            CrystalSpec(ppln, 20.0, 7.71, pt.temperature_c),
            pt.triplet)) < 1e-6


def test_tuning_curve_flags_unmatched(flat_material):
    # constant index with a finite poling period leaves dk = -2 pi / period
    crystal = CrystalSpec(flat_material, 20.0, 5.0, 25.0)
    points = tuning_curve(crystal, PUMP, 20.0, 40.0, 5)
    assert all(pt.triplet is None for pt in points)
    assert all(math.isnan(pt.residual) for pt in points)


def test_tuning_curve_argument_validation(ppln):
    crystal = CrystalSpec(ppln, 20.0, 7.71, 62.0)
    with pytest.raises(ValueError, match="steps"):
        tuning_curve(crystal, PUMP, 40.0, 80.0, 1)
    with pytest.raises(ValueError, match="increasing"):
        tuning_curve(crystal, PUMP, 80.0, 40.0, 5)
