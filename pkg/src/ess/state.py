"""Two-photon polarization density matrices produced by the source.

Basis ordering is {|HH>, |HV>, |VH>, |VV>} everywhere, including serialized
output.  The source nominally prepares (|HH> - |VV>)/sqrt(2) (the pump phase
is set to pi); mode distinguishability dephases the HH/VV coherence and a
small isotropic admixture models the residual experimental noise floor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

BASIS_LABELS = ("HH", "HV", "VH", "VV")

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-10


@dataclass(frozen=True)
class TwoPhotonState:
    """Validated 4x4 density matrix on the signal (x) idler polarization space."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError("density matrix must be 4x4")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > TRACE_TOL or abs(np.trace(rho).imag) > TRACE_TOL:
            raise ValueError("density matrix trace must be 1")
        if np.linalg.eigvalsh(rho).min() < PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def to_json_dict(self) -> dict:
        return {
            "basis": list(BASIS_LABELS),
            "rho": [[[float(z.real), float(z.imag)] for z in row] for row in self.rho],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TwoPhotonState":
        if list(d.get("basis", [])) != list(BASIS_LABELS):
            raise ValueError(f"state file must use basis {list(BASIS_LABELS)}")
        rho = np.array([[complex(re, im) for re, im in row] for row in d["rho"]])
        return cls(rho)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "TwoPhotonState":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class PumpPolarization:
    """Pump state alpha |H> + e^{i phase} beta |V>, amplitudes real >= 0."""

    alpha: float
    beta: float
    phase_rad: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("pump amplitudes must be non-negative")
        if abs(self.alpha**2 + self.beta**2 - 1.0) > 1e-12:
            raise ValueError("pump amplitudes must satisfy alpha^2 + beta^2 = 1")


def balanced_pump(phase_rad: float = math.pi) -> PumpPolarization:
    s = 1.0 / math.sqrt(2.0)
    return PumpPolarization(s, s, phase_rad)


@dataclass(frozen=True)
class ImperfectionParams:
    """Knobs degrading the ideal superposition.

    coherence_factor: product of the temporal and spatial overlap fractions;
    multiplies only the HH/VV coherence.
    phase_error_rad: residual interferometer phase added to the pump phase.
    isotropic_noise: weight of an admixed maximally mixed state.
    """

    coherence_factor: float = 1.0
    phase_error_rad: float = 0.0
    isotropic_noise: float = 0.0
    pump: PumpPolarization = field(default_factory=balanced_pump)

    def __post_init__(self):
        if not 0.0 <= self.coherence_factor <= 1.0:
            raise ValueError("coherence_factor must lie in [0, 1]")
        if not 0.0 <= self.isotropic_noise <= 1.0:
            raise ValueError("isotropic_noise must lie in [0, 1]")


def ideal_state(sign: str) -> TwoPhotonState:
    """Pure (|HH> + sign |VV>)/sqrt(2); sign is "+" or "-"."""
    if sign not in ("+", "-"):
        raise ValueError('sign must be "+" or "-"')
    s = 1.0 if sign == "+" else -1.0
    psi = np.array([1.0, 0.0, 0.0, s]) / math.sqrt(2.0)
    return TwoPhotonState(np.outer(psi, psi.conj()))


def source_state(params: ImperfectionParams) -> TwoPhotonState:
    """Density matrix of the source including imperfections.

    The pump H amplitude pumps the path that ends in |VV>, the V amplitude
    the path ending in |HH>, so the populations are beta^2 on HH and alpha^2
    on VV and the HH/VV coherence is alpha*beta*coherence_factor with phase
    pump.phase + phase_error.  The isotropic admixture mixes in I/4.
    """
    a, b = params.pump.alpha, params.pump.beta
    eps = params.isotropic_noise
    coh = a * b * params.coherence_factor * np.exp(
        1j * (params.pump.phase_rad + params.phase_error_rad))
    partial = np.zeros((4, 4), dtype=complex)
    partial[0, 0] = b * b
    partial[3, 3] = a * a
    partial[0, 3] = coh
    partial[3, 0] = np.conj(coh)
    rho = (1.0 - eps) * partial + eps * np.eye(4) / 4.0
    return TwoPhotonState(rho)


def werner_state(p: float, sign: str = "-") -> TwoPhotonState:
    """p * ideal_state(sign) + (1 - p) * I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("Werner weight p must lie in [0, 1]")
    rho = p * ideal_state(sign).rho + (1.0 - p) * np.eye(4) / 4.0
    return TwoPhotonState(rho)


def state_for_average_visibility(v_avg: float,
                                 coherence_factor: float = 1.0) -> TwoPhotonState:
    """Balanced-pump source state with the requested basis-averaged visibility.

    For a balanced pump at phase pi, the three conjugate-basis visibilities
    are (1 - eps) rectilinear and (1 - eps) * c in the two superposition
    bases, so eps = 1 - 3 v / (1 + 2 c) hits the requested average.
    """
    if not 0.0 <= v_avg <= 1.0:
        raise ValueError("average visibility must lie in [0, 1]")
    if coherence_factor <= 0.0:
        raise ValueError("coherence_factor must be > 0")
    eps = 1.0 - 3.0 * v_avg / (1.0 + 2.0 * coherence_factor)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(
            f"visibility {v_avg:g} unreachable with coherence_factor "
            f"{coherence_factor:g}")
    return source_state(ImperfectionParams(coherence_factor=coherence_factor,
                                           isotropic_noise=eps))
