"""Polarization projector algebra and the coincidence analysis built on it.

A measurement arm is quarter-waveplate -> half-waveplate -> polarizing
beamsplitter.  Jones conventions: fast axis angle measured from horizontal,
HWP retardance pi, QWP retardance pi/2 (fast-axis-first diag(1, i) form),
PBS transmits |H>.  Circular states follow |R> = (|H> + i|V>)/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state import TwoPhotonState

PROJECTOR_TOL = 1e-10

KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_D = (KET_H + KET_V) / math.sqrt(2.0)
KET_A = (KET_H - KET_V) / math.sqrt(2.0)
KET_R = (KET_H + 1j * KET_V) / math.sqrt(2.0)
KET_L = (KET_H - 1j * KET_V) / math.sqrt(2.0)

NAMED_KETS = {"H": KET_H, "V": KET_V, "D": KET_D, "A": KET_A, "R": KET_R, "L": KET_L}

# HWP fast-axis angles that project onto the named linear states
NAMED_HWP_DEG = {"H": 0.0, "V": 45.0, "D": 22.5, "A": 67.5}


@dataclass(frozen=True)
class MeasurementSetting:
    """Waveplate-angle pair and PBS port of one analyzer arm."""

    hwp_angle_deg: float
    qwp_angle_deg: float | None = None   # None: no quarter-waveplate in the arm
    port: str = "transmit"

    def __post_init__(self):
        if not 0.0 <= self.hwp_angle_deg < 360.0:
            raise ValueError("hwp_angle_deg must lie in [0, 360)")
        if self.qwp_angle_deg is not None and not 0.0 <= self.qwp_angle_deg < 360.0:
            raise ValueError("qwp_angle_deg must lie in [0, 360)")
        if self.port not in ("transmit", "reflect"):
            raise ValueError('port must be "transmit" or "reflect"')


def jones_hwp(angle_deg: float) -> np.ndarray:
    """Half-waveplate with fast axis at angle_deg from horizontal."""
    c, s = math.cos(2 * math.radians(angle_deg)), math.sin(2 * math.radians(angle_deg))
    return np.array([[c, s], [s, -c]], dtype=complex)


def jones_qwp(angle_deg: float) -> np.ndarray:
    """Quarter-waveplate with fast axis at angle_deg from horizontal."""
    th = math.radians(angle_deg)
    c, s = math.cos(th), math.sin(th)
    return np.array([[c * c + 1j * s * s, (1 - 1j) * s * c],
                     [(1 - 1j) * s * c, s * s + 1j * c * c]], dtype=complex)


def projector_from_ket(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def named_projector(name: str) -> np.ndarray:
    return projector_from_ket(NAMED_KETS[name])


def linear_projector(angle_deg: float) -> np.ndarray:
    """Projector onto linear polarization at angle_deg from horizontal."""
    th = math.radians(angle_deg)
    return projector_from_ket(np.array([math.cos(th), math.sin(th)], dtype=complex))


def is_projector(p: np.ndarray, tol: float = PROJECTOR_TOL) -> bool:
    p = np.asarray(p)
    return (np.max(np.abs(p - p.conj().T)) < tol
            and np.max(np.abs(p @ p - p)) < tol
            and abs(np.trace(p).real - 1.0) < tol)


def setting_to_projector(setting: MeasurementSetting) -> np.ndarray:
    """Heisenberg-picture projector of one analyzer arm.

    Light passes the QWP (when present), then the HWP, then the PBS; the
    measured projector is U^dag P_port U.
    """
    u = jones_hwp(setting.hwp_angle_deg)
    if setting.qwp_angle_deg is not None:
        u = u @ jones_qwp(setting.qwp_angle_deg)
    port = named_projector("H" if setting.port == "transmit" else "V")
    return u.conj().T @ port @ u


def coincidence_probability(state: TwoPhotonState, proj_signal: np.ndarray,
                            proj_idler: np.ndarray) -> float:
    """Tr[rho (P_s x P_i)], the joint projection probability."""
    val = np.trace(state.rho @ np.kron(proj_signal, proj_idler))
    return float(val.real)


def visibility_from_counts(c_hh, c_hv, c_vh, c_vv) -> float:
    """Signed polarization visibility (c1 - c2 - c3 + c4) / sum."""
    counts = (c_hh, c_hv, c_vh, c_vv)
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ValueError("visibility undefined: all four counts are zero")
    return (c_hh - c_hv - c_vh + c_vv) / total


def _fixed_projector(fixed) -> np.ndarray:
    if isinstance(fixed, MeasurementSetting):
        return setting_to_projector(fixed)
    if isinstance(fixed, str):
        return named_projector(fixed)
    return np.asarray(fixed, dtype=complex)


def correlation_curve(state: TwoPhotonState, fixed,
                      sweep_step_deg: float) -> list[tuple[float, float]]:
    """Coincidence probability vs idler analyzer angle.

    ``fixed`` selects the signal projector (a MeasurementSetting, a named
    basis letter, or an explicit 2x2 projector); the idler is projected onto
    linear polarization swept over [0, 360) in steps of sweep_step_deg.
    """
    if sweep_step_deg <= 0 or abs(360.0 / sweep_step_deg - round(360.0 / sweep_step_deg)) > 1e-9:
        raise ValueError("sweep step must divide 360 degrees")
    proj_s = _fixed_projector(fixed)
    curve = []
    angle = 0.0
    while angle < 360.0 - 1e-9:
        prob = coincidence_probability(state, proj_s, linear_projector(angle))
        curve.append((angle, prob))
        angle += sweep_step_deg
    return curve


@dataclass(frozen=True)
class SinusoidFit:
    """a + b cos(2 theta - phi0) least-squares fit of a correlation curve."""

    amplitude: float
    phase_rad: float
    offset: float
    visibility: float
    visibility_sigma: float


def fit_sinusoid(samples) -> SinusoidFit:
    """Fit a + b cos(2 theta - phi0) through (angle_deg, value) samples.

    Linear least squares on the (1, cos 2theta, sin 2theta) regressors, so
    the result is deterministic.  visibility = b / a; its standard error
    comes from the residual-based parameter covariance.
    """
    samples = list(samples)
    if len(samples) < 4:
        raise ValueError("need at least 4 samples")
    th = np.radians([s[0] for s in samples])
    y = np.array([s[1] for s in samples], dtype=float)
    if th.max() - th.min() < math.pi - 1e-9:
        raise ValueError("samples must span at least 180 degrees")
    design = np.column_stack([np.ones_like(th), np.cos(2 * th), np.sin(2 * th)])
    gram = design.T @ design
    if np.linalg.cond(gram) > 1e12:
        raise ValueError("degenerate design matrix; angles do not constrain the fit")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    a, bc, bs = coef
    amplitude = math.hypot(bc, bs)
    phase = math.atan2(bs, bc)
    if a == 0:
        raise ValueError("zero offset; visibility undefined")
    visibility = amplitude / a

    resid = y - design @ coef
    dof = len(y) - 3
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(gram)
    if amplitude > 0:
        grad = np.array([-amplitude / a**2, bc / (amplitude * a), bs / (amplitude * a)])
        vis_sigma = float(np.sqrt(grad @ cov @ grad))
    else:
        vis_sigma = float(np.sqrt(cov[1, 1] + cov[2, 2]) / abs(a))
    return SinusoidFit(amplitude, phase, float(a), visibility, vis_sigma)


def correlator(state: TwoPhotonState, angle_a_deg: float, angle_b_deg: float) -> float:
    """Four-outcome correlator E(a, b) with linear analyzers at a and b."""
    e = 0.0
    for da, sa in ((0.0, +1.0), (90.0, -1.0)):
        for db, sb in ((0.0, +1.0), (90.0, -1.0)):
            e += sa * sb * coincidence_probability(
                state, linear_projector(angle_a_deg + da),
                linear_projector(angle_b_deg + db))
    return e


def chsh(state: TwoPhotonState, a_deg: float, a_prime_deg: float,
         b_deg: float, b_prime_deg: float) -> float:
    """CHSH statistic S = E(a,b) - E(a,b') - E(a',b) - E(a',b').

    The sign pattern is the one that maximizes |S| for (|HH> - |VV>)/sqrt(2)
    at analyzer angles (0, 45) x (22.5, 67.5), where it reaches 2 sqrt(2).
    """
    return (correlator(state, a_deg, b_deg)
            - correlator(state, a_deg, b_prime_deg)
            - correlator(state, a_prime_deg, b_deg)
            - correlator(state, a_prime_deg, b_prime_deg))


STANDARD_CHSH_ANGLES = (0.0, 45.0, 22.5, 67.5)
