"""Quasi-phase-matching solver for the type-0 SPDC process in PPLN.

Energy conservation fixes the idler from pump and signal; the temperature
tuning curve finds, per temperature, the signal wavelength that zeroes the
collinear QPM momentum mismatch, all fields on the extraordinary axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .materials import OpticalAxis, SellmeierModel, refractive_index

TWO_PI = 2.0 * math.pi

ENERGY_TOL_PER_NM = 1e-9   # |1/lp - 1/ls - 1/li| tolerance, nm^-1
ROOT_RESIDUAL = 1e-6       # |dk| target of the bisection refinement, rad/um


@dataclass(frozen=True)
class CrystalSpec:
    """Periodically poled nonlinear crystal at its operating temperature."""

    material: SellmeierModel
    length_mm: float
    poling_period_um: float
    temperature_c: float
    qpm_order: int = 1

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ValueError("crystal length must be > 0")
        if self.poling_period_um <= 0:
            raise ValueError("poling period must be > 0")
        if self.qpm_order <= 0 or self.qpm_order % 2 == 0:
            raise ValueError("qpm_order must be a positive odd integer")


@dataclass(frozen=True)
class SpdcTriplet:
    """Energy-conserving (pump, signal, idler) wavelengths in nm."""

    pump_nm: float
    signal_nm: float
    idler_nm: float

    def __post_init__(self):
        residual = abs(1.0 / self.pump_nm - 1.0 / self.signal_nm - 1.0 / self.idler_nm)
        if residual > ENERGY_TOL_PER_NM:
            raise ValueError(
                f"triplet violates energy conservation by {residual:.3e} nm^-1")
        if self.signal_nm > self.idler_nm:
            raise ValueError("signal wavelength must not exceed idler wavelength")


def conjugate_wavelength(pump_nm: float, signal_nm: float) -> float:
    """Idler wavelength from energy conservation, 1/li = 1/lp - 1/ls."""
    if signal_nm <= pump_nm:
        raise ValueError(
            f"signal ({signal_nm:g} nm) must be longer than the pump "
            f"({pump_nm:g} nm); no down-conversion otherwise")
    return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm)


def make_triplet(pump_nm: float, signal_nm: float) -> SpdcTriplet:
    """Ordered triplet from pump and signal (signal <= idler by convention)."""
    idler = conjugate_wavelength(pump_nm, signal_nm)
    if signal_nm <= idler:
        return SpdcTriplet(pump_nm, signal_nm, idler)
    return SpdcTriplet(pump_nm, idler, signal_nm)


def qpm_mismatch(crystal: CrystalSpec, triplet: SpdcTriplet) -> float:
    """Collinear type-0 QPM mismatch dk in rad/um.

    dk = 2 pi [ n(lp)/lp - n(ls)/ls - n(li)/li ] - 2 pi m / period,
    all indices extraordinary at the crystal temperature.
    """
    t = crystal.temperature_c
    terms = 0.0
    for lam_nm, sign in ((triplet.pump_nm, +1.0), (triplet.signal_nm, -1.0),
                         (triplet.idler_nm, -1.0)):
        n = refractive_index(crystal.material, lam_nm, t, OpticalAxis.EXTRAORDINARY)
        terms += sign * n / (lam_nm / 1000.0)
    return TWO_PI * terms - TWO_PI * crystal.qpm_order / crystal.poling_period_um


@dataclass(frozen=True)
class TuningPoint:
    """One sample of the temperature tuning curve.

    ``triplet`` is None when no phase-matched solution exists at this
    temperature; ``residual`` is the |dk| left by the root refinement.
    """

    temperature_c: float
    triplet: SpdcTriplet | None
    residual: float


def _signal_bracket(crystal: CrystalSpec, pump_nm: float) -> tuple[float, float]:
    # keep the derived idler inside the Sellmeier range
    hi_idler = crystal.material.valid_range_nm[1]
    lo = max(pump_nm * (1.0 + 1e-6), conjugate_wavelength(pump_nm, hi_idler))
    degenerate = 2.0 * pump_nm
    hi = degenerate * (1.0 - 1e-9)
    return lo, hi


def solve_signal(crystal: CrystalSpec, pump_nm: float,
                 scan_points: int = 100) -> tuple[SpdcTriplet | None, float]:
    """Signal wavelength with dk = 0 on the non-degenerate branch.

    Scans ``scan_points`` samples of lambda_signal between the pump and the
    degenerate point for a sign change, then bisects to |dk| < 1e-6 rad/um.
    Returns (triplet, residual), or (None, nan) when no root is bracketed.
    """
    lo, hi = _signal_bracket(crystal, pump_nm)

    def dk_at(ls):
        return qpm_mismatch(crystal, make_triplet(pump_nm, ls))

    xs = [lo + (hi - lo) * k / (scan_points - 1) for k in range(scan_points)]
    fs = [dk_at(x) for x in xs]
    a = b = None
    for k in range(scan_points - 1):
        if fs[k] == 0.0:
            a = b = xs[k]
            break
        if fs[k] * fs[k + 1] < 0.0:
            a, b = xs[k], xs[k + 1]
            break
    if a is None:
        return None, math.nan

    fa = dk_at(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = dk_at(mid)
        if abs(fm) < ROOT_RESIDUAL:
            return make_triplet(pump_nm, mid), abs(fm)
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    mid = 0.5 * (a + b)
    return make_triplet(pump_nm, mid), abs(dk_at(mid))


def tuning_curve(crystal: CrystalSpec, pump_nm: float,
                 t_min_c: float, t_max_c: float, steps: int) -> list[TuningPoint]:
    """Phase-matched signal/idler wavelengths over a temperature interval."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if t_min_c >= t_max_c:
        raise ValueError("temperature interval must be increasing")
    points = []
    for k in range(steps):
        t = t_min_c + (t_max_c - t_min_c) * k / (steps - 1)
        crystal_t = CrystalSpec(crystal.material, crystal.length_mm,
                                crystal.poling_period_um, t, crystal.qpm_order)
        triplet, residual = solve_signal(crystal_t, pump_nm)
        points.append(TuningPoint(t, triplet, residual))
    return points
