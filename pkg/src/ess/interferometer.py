"""Beam-displacer geometry for the double-loop Sagnac design.

Walk-off separations and walk-off path delays in the two displacers set how
well the clockwise- and counterclockwise-generated photon wavepackets overlap
when they recombine, which in turn bounds the achievable entanglement quality.

Conventions used throughout:

* the displaced (extraordinary) ray leaves a displacer of length L with a
  lateral offset L*tan(rho), rho from the standard uniaxial walk-off relation;
* the transit-delay difference between the two polarization paths is the
  *walk-off excess path* delay, (L/cos(rho) - L) * n_g / c, with n_g the group
  index of the extraordinary wave at the cut angle.  This is the quantity the
  pump/photon delay figures of the source design refer to; the full o/e group
  transit difference is an order of magnitude larger and cancels between the
  two displacers by construction of the loop;
* coherence times are intensity-FWHM, beam sizes are Gaussian diameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .materials import OpticalAxis, SellmeierModel, refractive_index
from .phasematch import SpdcTriplet

C_MM_PER_PS = 0.299792458
LN2 = math.log(2.0)


@dataclass(frozen=True)
class BeamDisplacerSpec:
    """Birefringent displacer: material, length, optic-axis cut angle."""

    material: SellmeierModel
    length_mm: float
    cut_angle_deg: float = 45.0

    def __post_init__(self):
        if self.length_mm < 0:
            raise ValueError("displacer length must be >= 0")
        if not 0.0 < self.cut_angle_deg < 90.0:
            raise ValueError("cut angle must lie strictly between 0 and 90 deg")


@dataclass(frozen=True)
class SetupGeometry:
    """Everything the overlap budget of the source depends on."""

    bd1: BeamDisplacerSpec
    bd2: BeamDisplacerSpec
    pump_coherence_time_ps: float
    photon_coherence_time_ps: float
    signal_beam_diameter_mm: float
    idler_beam_diameter_mm: float
    triplet: SpdcTriplet

    def __post_init__(self):
        for name in ("pump_coherence_time_ps", "photon_coherence_time_ps",
                     "signal_beam_diameter_mm", "idler_beam_diameter_mm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class OverlapReport:
    """Mismatches and overlap fractions of the recombined wavepackets."""

    separation_mm: float          # pump walk-off separation after BD1
    pump_delay_ps: float          # pump walk-off path delay in BD1
    delta_tau_signal_ps: float
    delta_tau_idler_ps: float
    delta_d_signal_mm: float
    delta_d_idler_mm: float
    temporal_overlap: float
    spatial_overlap_signal: float
    spatial_overlap_idler: float


def _extraordinary_wave_index(bd: BeamDisplacerSpec, wavelength_nm: float) -> float:
    no = refractive_index(bd.material, wavelength_nm, axis=OpticalAxis.ORDINARY)
    ne = refractive_index(bd.material, wavelength_nm, axis=OpticalAxis.EXTRAORDINARY)
    th = math.radians(bd.cut_angle_deg)
    inv_n2 = math.cos(th) ** 2 / no**2 + math.sin(th) ** 2 / ne**2
    return 1.0 / math.sqrt(inv_n2)


def walkoff_tangent(bd: BeamDisplacerSpec, wavelength_nm: float) -> float:
    """tan(rho) of the extraordinary-ray walk-off at the cut angle."""
    no = refractive_index(bd.material, wavelength_nm, axis=OpticalAxis.ORDINARY)
    ne = refractive_index(bd.material, wavelength_nm, axis=OpticalAxis.EXTRAORDINARY)
    neff = _extraordinary_wave_index(bd, wavelength_nm)
    th = math.radians(bd.cut_angle_deg)
    return 0.5 * neff**2 * math.sin(2.0 * th) * (1.0 / ne**2 - 1.0 / no**2)


def walkoff_separation(bd: BeamDisplacerSpec, wavelength_nm: float) -> float:
    """Lateral separation in mm between the two polarization paths."""
    return bd.length_mm * walkoff_tangent(bd, wavelength_nm)


def _extraordinary_group_index(bd: BeamDisplacerSpec, wavelength_nm: float,
                               rel_step: float = 1e-4) -> float:
    # same central-difference rule as materials.group_index, applied to the
    # angle-dependent extraordinary wave index
    h = wavelength_nm * rel_step
    n = _extraordinary_wave_index(bd, wavelength_nm)
    n_plus = _extraordinary_wave_index(bd, wavelength_nm + h)
    n_minus = _extraordinary_wave_index(bd, wavelength_nm - h)
    return n - wavelength_nm * (n_plus - n_minus) / (2.0 * h)


def transit_delay_difference(bd: BeamDisplacerSpec, wavelength_nm: float) -> float:
    """Walk-off path delay in ps between the two polarization paths.

    The displaced ray travels the diagonal L/cos(rho) instead of L; the
    excess converts to time with the group index of the extraordinary wave
    at the cut angle.  Always >= 0; zero for an isotropic material.
    """
    if bd.length_mm == 0.0:
        return 0.0
    rho = math.atan(abs(walkoff_tangent(bd, wavelength_nm)))
    if rho == 0.0:
        return 0.0
    ng = _extraordinary_group_index(bd, wavelength_nm)
    excess_mm = bd.length_mm * (1.0 / math.cos(rho) - 1.0)
    return excess_mm * ng / C_MM_PER_PS


def temporal_overlap(delta_tau_signal_ps: float, delta_tau_idler_ps: float,
                     coherence_time_ps: float) -> float:
    """Amplitude overlap of the two-photon wavepackets.

    For a cw-pumped source only the signal/idler delay difference matters;
    the overlap of two Gaussian wavepackets of intensity-FWHM coherence time
    tau_c displaced by delta is exp(-delta^2 ln2 / tau_c^2).
    """
    if coherence_time_ps <= 0:
        raise ValueError("coherence time must be > 0")
    delta = abs(delta_tau_signal_ps - delta_tau_idler_ps)
    return math.exp(-(delta**2) * LN2 / coherence_time_ps**2)


def spatial_overlap(delta_d_mm: float, beam_diameter_mm: float) -> float:
    """Amplitude overlap of two identical Gaussian modes displaced by delta_d."""
    if beam_diameter_mm <= 0:
        raise ValueError("beam diameter must be > 0")
    w = beam_diameter_mm / 2.0
    return math.exp(-(delta_d_mm**2) / (4.0 * w**2))


def pair_mismatch(setup: SetupGeometry) -> OverlapReport:
    """Residual wavepacket mismatches of the recombined photon paths.

    The pump beam that takes the displaced path in BD1 creates pairs that
    take the straight path in BD2 and vice versa, so the residual per photon
    is the difference between the pump figure in BD1 and the photon figure
    in BD2, each evaluated at its own wavelength.
    """
    t = setup.triplet
    sep_pump = walkoff_separation(setup.bd1, t.pump_nm)
    sep_signal = walkoff_separation(setup.bd2, t.signal_nm)
    sep_idler = walkoff_separation(setup.bd2, t.idler_nm)
    delay_pump = transit_delay_difference(setup.bd1, t.pump_nm)
    delay_signal = transit_delay_difference(setup.bd2, t.signal_nm)
    delay_idler = transit_delay_difference(setup.bd2, t.idler_nm)

    dtau_s = abs(delay_pump - delay_signal)
    dtau_i = abs(delay_pump - delay_idler)
    dd_s = abs(sep_pump - sep_signal)
    dd_i = abs(sep_pump - sep_idler)

    return OverlapReport(
        separation_mm=sep_pump,
        pump_delay_ps=delay_pump,
        delta_tau_signal_ps=dtau_s,
        delta_tau_idler_ps=dtau_i,
        delta_d_signal_mm=dd_s,
        delta_d_idler_mm=dd_i,
        temporal_overlap=temporal_overlap(dtau_s, dtau_i, setup.photon_coherence_time_ps),
        spatial_overlap_signal=spatial_overlap(dd_s, setup.signal_beam_diameter_mm),
        spatial_overlap_idler=spatial_overlap(dd_i, setup.idler_beam_diameter_mm),
    )


def coherence_factor(report: OverlapReport) -> float:
    """Scalar indistinguishability factor: temporal x both spatial overlaps."""
    return (report.temporal_overlap * report.spatial_overlap_signal
            * report.spatial_overlap_idler)
