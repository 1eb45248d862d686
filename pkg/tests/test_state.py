import math

import numpy as np
import pytest

from ess import measurement
from ess.state import (BASIS_LABELS, ImperfectionParams, PumpPolarization,
                       TwoPhotonState, balanced_pump, ideal_state, source_state,
                       state_for_average_visibility, werner_state)

SQ2 = 1.0 / math.sqrt(2.0)


def test_ideal_state_entries():
    rho_minus = ideal_state("-").rho
    assert rho_minus[0, 0] == pytest.approx(0.5)
    assert rho_minus[3, 3] == pytest.approx(0.5)
    assert rho_minus[0, 3] == pytest.approx(-0.5)
    assert rho_minus[3, 0] == pytest.approx(-0.5)
    assert np.abs(rho_minus[1:3, :]).max() == 0.0
    rho_plus = ideal_state("+").rho
    assert rho_plus[0, 3] == pytest.approx(0.5)
    for sign in "+-":
        rho = ideal_state(sign).rho
        assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ideal_state("x")


def test_source_state_ideal_limit():
    params = ImperfectionParams(coherence_factor=1.0, isotropic_noise=0.0,
                                pump=balanced_pump(math.pi))
    assert np.allclose(source_state(params).rho, ideal_state("-").rho, atol=1e-12)


def test_source_state_dephased_limit():
    params = ImperfectionParams(coherence_factor=0.0, isotropic_noise=0.0)
    rho = source_state(params).rho
    assert np.allclose(rho, np.diag([0.5, 0.0, 0.0, 0.5]), atol=1e-12)


def test_source_state_werner_form_visibility():
    # noise 1-p with full coherence gives a Werner state whose visibility
    # in every conjugate basis is p; cross-checked through the projector
    # algebra (p = 0.9588 matches the published average visibility)
    p = 0.9588
    rho = source_state(ImperfectionParams(isotropic_noise=1.0 - p))
    assert np.allclose(rho.rho, werner_state(p).rho, atol=1e-12)
    for combos in ((("H", "H"), ("H", "V"), ("V", "H"), ("V", "V")),
                   (("D", "A"), ("D", "D"), ("A", "A"), ("A", "D")),
                   (("R", "R"), ("R", "L"), ("L", "R"), ("L", "L"))):
        probs = [measurement.coincidence_probability(
            rho, measurement.named_projector(a), measurement.named_projector(b))
            for a, b in combos]
        vis = (probs[0] - probs[1] - probs[2] + probs[3])
        assert abs(vis) / sum(probs) == pytest.approx(p, abs=1e-12)


def test_source_state_offdiagonal_magnitude():
    params = ImperfectionParams(coherence_factor=0.73, phase_error_rad=0.21,
                                isotropic_noise=0.05,
                                pump=PumpPolarization(0.6, 0.8, 2.0))
    rho = source_state(params).rho
    expected = 0.6 * 0.8 * 0.73 * (1.0 - 0.05)
    assert abs(rho[0, 3]) == pytest.approx(expected, abs=1e-12)
    # populations carry the pump weights: H amplitude pumps the VV path
    assert rho[3, 3].real == pytest.approx(0.95 * 0.36 + 0.05 / 4, abs=1e-12)
    assert rho[0, 0].real == pytest.approx(0.95 * 0.64 + 0.05 / 4, abs=1e-12)


def test_source_state_continuity():
    base = ImperfectionParams(coherence_factor=0.9, phase_error_rad=0.1,
                              isotropic_noise=0.02)
    rho0 = source_state(base).rho
    bumped = [
        ImperfectionParams(0.9 + 1e-9, 0.1, 0.02),
        ImperfectionParams(0.9, 0.1 + 1e-9, 0.02),
        ImperfectionParams(0.9, 0.1, 0.02 + 1e-9),
        ImperfectionParams(0.9, 0.1, 0.02,
                           PumpPolarization(SQ2, SQ2, math.pi + 1e-9)),
    ]
    for params in bumped:
        assert np.abs(source_state(params).rho - rho0).max() < 1e-6


def test_constructor_outputs_are_valid_states():
    rng = np.random.default_rng(42)
    for _ in range(50):
        a = rng.uniform(0.0, 1.0)
        params = ImperfectionParams(
            coherence_factor=rng.uniform(0, 1),
            phase_error_rad=rng.uniform(-math.pi, math.pi),
            isotropic_noise=rng.uniform(0, 1),
            pump=PumpPolarization(math.sqrt(a), math.sqrt(1 - a),
                                  rng.uniform(0, 2 * math.pi)))
        rho = source_state(params).rho  # constructor validates
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_werner_endpoints():
    assert np.allclose(werner_state(1.0).rho, ideal_state("-").rho)
    rho = werner_state(0.0).rho
    assert np.allclose(rho, np.eye(4) / 4)
    assert np.trace(rho @ rho).real == pytest.approx(0.25)
    with pytest.raises(ValueError):
        werner_state(1.5)


def test_state_for_average_visibility():
    rho = state_for_average_visibility(0.9588, coherence_factor=45.0 / 46.0)
    # rectilinear visibility is 1 - eps, the two conjugate bases carry the
    # extra coherence factor; their mean must equal the request
    probs_hv = [measurement.coincidence_probability(
        rho, measurement.named_projector(a), measurement.named_projector(b))
        for a, b in (("H", "H"), ("H", "V"), ("V", "H"), ("V", "V"))]
    v_hv = (probs_hv[0] - probs_hv[1] - probs_hv[2] + probs_hv[3]) / sum(probs_hv)
    assert v_hv == pytest.approx(0.9729, abs=1e-6)
    with pytest.raises(ValueError, match="unreachable"):
        state_for_average_visibility(0.999, coherence_factor=0.5)


def test_validation_errors():
    with pytest.raises(ValueError, match="alpha"):
        PumpPolarization(0.9, 0.9, 0.0)
    with pytest.raises(ValueError, match="non-negative"):
        PumpPolarization(-0.6, 0.8, 0.0)
    with pytest.raises(ValueError, match="coherence_factor"):
        ImperfectionParams(coherence_factor=1.2)
    with pytest.raises(ValueError, match="isotropic_noise"):
        ImperfectionParams(isotropic_noise=-0.1)
    with pytest.raises(ValueError, match="Hermitian"):
        TwoPhotonState(np.diag([0.5, 0.5, 0.0, 0.0]) + 1e-5 * np.triu(np.ones((4, 4)), 1))
    with pytest.raises(ValueError, match="trace"):
        TwoPhotonState(np.diag([0.5, 0.5, 0.5, 0.0]))
    with pytest.raises(ValueError, match="positive semidefinite"):
        TwoPhotonState(np.diag([1.1, 0.0, 0.0, -0.1]))
    with pytest.raises(ValueError, match="4x4"):
        TwoPhotonState(np.eye(2) / 2)


def test_json_roundtrip(tmp_path):
    rho = source_state(ImperfectionParams(coherence_factor=0.9,
                                          phase_error_rad=0.3,
                                          isotropic_noise=0.04))
    path = tmp_path / "state.json"
    rho.save(path)
    loaded = TwoPhotonState.load(path)
    assert np.allclose(loaded.rho, rho.rho, atol=1e-15)
    d = rho.to_json_dict()
    assert d["basis"] == list(BASIS_LABELS)
    d["basis"] = ["HH", "HV", "VV", "VH"]
    with pytest.raises(ValueError, match="basis"):
        TwoPhotonState.from_json_dict(d)
