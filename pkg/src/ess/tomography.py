"""16-setting projective tomography with maximum-likelihood reconstruction.

The setting list is the canonical informationally complete two-qubit set
(rectilinear/diagonal/circular combinations); reconstruction maximizes the
Poisson log-likelihood over a Cholesky parameterization, which keeps the
estimate physical by construction.  Entanglement metrics operate on any
valid TwoPhotonState.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measurement import NAMED_KETS, projector_from_ket
from .state import TwoPhotonState

GRAM_CONDITION_LIMIT = 1e6
LOGLIK_TOL = 1e-10
MAX_ITERATIONS = 10_000

# canonical 16-projection sequence; the first four match the published
# measurement order (signal letter first, idler second)
STANDARD_LABELS = (
    "HH", "HV", "VV", "VH",
    "RH", "RV", "DV", "DH",
    "DR", "DD", "RD", "HD",
    "VD", "VL", "HL", "RL",
)


@dataclass(frozen=True)
class TomographySet:
    """Ordered projective settings: (label, signal projector, idler projector)."""

    labels: tuple
    projectors: tuple   # tuple of (2x2, 2x2) ndarray pairs

    def __post_init__(self):
        if len(self.labels) != len(self.projectors):
            raise ValueError("labels and projectors must have equal length")
        ops = [np.kron(ps, pi) for ps, pi in self.projectors]
        if len(ops) != 16:
            raise ValueError("a tomography set must contain 16 settings")
        gram = np.array([[np.trace(a.conj().T @ b) for b in ops] for a in ops])
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
            raise ValueError(
                f"projector set is not informationally complete "
                f"(Gram condition number {cond:.3g})")

    def joint_operators(self) -> list:
        return [np.kron(ps, pi) for ps, pi in self.projectors]


def standard_settings() -> TomographySet:
    """The canonical 16-projection set over {H, V, D, R, L} combinations."""
    projectors = []
    for label in STANDARD_LABELS:
        ket_s, ket_i = NAMED_KETS[label[0]], NAMED_KETS[label[1]]
        projectors.append((projector_from_ket(ket_s), projector_from_ket(ket_i)))
    return TomographySet(STANDARD_LABELS, tuple(projectors))


@dataclass(frozen=True)
class TomographyData:
    """Measured coincidence counts per setting."""

    labels: tuple
    counts: tuple        # integers >= 0
    duration_s: float = 10.0

    def __post_init__(self):
        if len(self.labels) != len(self.counts):
            raise ValueError("labels and counts must have equal length")
        if any(int(c) != c or c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative integers")
        if self.duration_s <= 0:
            raise ValueError("duration must be > 0")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))


def simulate_tomography(state: TwoPhotonState, settings: TomographySet,
                        rate_scale: float, seed,
                        duration_s: float = 10.0) -> TomographyData:
    """Poisson-sampled counts with mean rate_scale * projection probability."""
    if rate_scale <= 0:
        raise ValueError("rate_scale must be > 0")
    rng = np.random.default_rng(seed)
    means = [rate_scale * max(_probability(state.rho, op), 0.0)
             for op in settings.joint_operators()]
    counts = tuple(int(rng.poisson(m)) for m in means)
    return TomographyData(settings.labels, counts, duration_s)


def _probability(rho: np.ndarray, op: np.ndarray) -> float:
    return float(np.trace(rho @ op).real)


# ---------------------------------------------------------------------------
# maximum-likelihood reconstruction


@dataclass(frozen=True)
class MleResult:
    state: TwoPhotonState
    log_likelihood: float
    converged: bool
    iterations: int


_DIAG = [(0, 0), (1, 1), (2, 2), (3, 3)]
_LOWER = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]


def _t_from_params(t: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    for k, (r, c) in enumerate(_DIAG):
        m[r, c] = t[k]
    for k, (r, c) in enumerate(_LOWER):
        m[r, c] = t[4 + 2 * k] + 1j * t[5 + 2 * k]
    return m


def _params_from_t(m: np.ndarray) -> np.ndarray:
    t = np.zeros(16)
    for k, (r, c) in enumerate(_DIAG):
        t[k] = m[r, c].real
    for k, (r, c) in enumerate(_LOWER):
        t[4 + 2 * k] = m[r, c].real
        t[5 + 2 * k] = m[r, c].imag
    return t


def _log_likelihood(counts: np.ndarray, mus: np.ndarray) -> float:
    if np.any(mus <= 0.0):
        if np.any((mus <= 0.0) & (counts > 0)):
            return -math.inf
        mus = np.where(mus <= 0.0, 1.0, mus)  # n=0 terms contribute -mu only
        return float(np.sum(np.where(counts > 0, counts * np.log(mus), 0.0) - mus))
    return float(np.sum(counts * np.log(mus) - mus))


def linear_inversion(data: TomographyData, settings: TomographySet) -> np.ndarray:
    """Unnormalized Hermitian matrix with Tr[rho_u Pi_k] = n_k for all k.

    The solution of this 16x16 linear system is the linear-inversion
    estimate scaled by the per-setting count normalization; it is generally
    not positive semidefinite.
    """
    ops = settings.joint_operators()
    basis = []
    for r in range(4):
        basis.append(_unit_herm(r, r))
    for r in range(4):
        for c in range(r + 1, 4):
            basis.append(_unit_herm(r, c, imag=False))
            basis.append(_unit_herm(r, c, imag=True))
    a = np.array([[np.trace(b @ op).real for b in basis] for op in ops])
    coeffs = np.linalg.solve(a, np.array(data.counts, dtype=float))
    return sum(c * b for c, b in zip(coeffs, basis))


def _unit_herm(r: int, c: int, imag: bool = False) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    if r == c:
        m[r, c] = 1.0
    elif imag:
        m[r, c] = -1j
        m[c, r] = 1j
    else:
        m[r, c] = 1.0
        m[c, r] = 1.0
    return m


def _psd_floor(rho: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals.real, floor, None)
    rho = (vecs * vals) @ vecs.conj().T
    return rho / np.trace(rho).real


def mle_reconstruct(data: TomographyData, settings: TomographySet) -> MleResult:
    """Maximum-likelihood density matrix from 16 projective counts.

    rho(t) = T^dag T / Tr(T^dag T) with T lower triangular (16 real
    parameters); the Poisson likelihood sum_k [n_k ln mu_k - mu_k] with
    mu_k = Tr(T^dag T Pi_k) is climbed by damped Fisher scoring
    (Levenberg-Marquardt style: failed steps backtrack by raising the
    damping), starting from the PSD-projected linear-inversion estimate.
    Terminates when an accepted step improves the log-likelihood by less
    than 1e-10, or at the iteration cap (the result then carries
    converged=False).
    """
    if len(data.counts) != len(settings.labels):
        raise ValueError("data and settings lengths do not match")
    counts = np.array(data.counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("total counts must be > 0")
    ops = settings.joint_operators()

    rho_u = linear_inversion(data, settings)
    scale = max(np.trace(rho_u).real, total / len(ops))
    rho0 = _psd_floor(rho_u / max(np.trace(rho_u).real, 1e-12))
    t_mat = np.linalg.cholesky(scale * rho0)
    t = _params_from_t(t_mat)

    def mus_of(t_vec):
        m = _t_from_params(t_vec)
        rho_un = m.conj().T @ m
        return np.array([_probability(rho_un, op) for op in ops]), m

    mus, t_mat = mus_of(t)
    ll = _log_likelihood(counts, mus)
    converged = False
    iterations = 0
    damping = 1e-3
    for iterations in range(1, MAX_ITERATIONS + 1):
        # score vector and Fisher information in the 16 real parameters
        weights = np.where(mus > 0, counts / np.where(mus > 0, mus, 1.0) - 1.0, 0.0)
        grad_mat = np.zeros((4, 4), dtype=complex)
        dmus = np.empty((len(ops), 16))
        info_w = np.empty(len(ops))
        for k, op in enumerate(ops):
            tp = t_mat @ op
            grad_mat += weights[k] * tp
            dmus[k] = _params_from_t(2.0 * tp)
            if mus[k] > 0:
                info_w[k] = counts[k] / mus[k] ** 2 if counts[k] > 0 else 1.0 / mus[k]
            else:
                info_w[k] = 0.0
        grad = _params_from_t(2.0 * grad_mat)
        fisher = (dmus * info_w[:, None]).T @ dmus
        unit = np.trace(fisher) / 16.0 + 1e-300

        # damped scoring step; failed steps raise the damping (which both
        # shortens and re-orients the step toward the raw gradient)
        improved = False
        ll_new = -math.inf
        for _ in range(40):
            direction = np.linalg.solve(fisher + damping * unit * np.eye(16), grad)
            t_new = t + direction
            mus_new, t_mat_new = mus_of(t_new)
            ll_new = _log_likelihood(counts, mus_new)
            if ll_new > ll:
                improved = True
                break
            damping *= 10.0
        if not improved:
            converged = True
            break
        gain = ll_new - ll
        t, mus, t_mat, ll = t_new, mus_new, t_mat_new, ll_new
        damping = max(damping / 5.0, 1e-12)
        if gain < LOGLIK_TOL:
            converged = True
            break

    rho_un = t_mat.conj().T @ t_mat
    rho = rho_un / np.trace(rho_un).real
    rho = 0.5 * (rho + rho.conj().T)
    return MleResult(TwoPhotonState(rho), ll, converged, iterations)


# ---------------------------------------------------------------------------
# entanglement metrics

_SY_SY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]])).real


def concurrence(state: TwoPhotonState) -> float:
    """Wootters concurrence, max(0, l1 - l2 - l3 - l4)."""
    rho = state.rho
    rho_tilde = _SY_SY @ rho.conj() @ _SY_SY
    eigs = np.linalg.eigvals(rho @ rho_tilde)
    lams = np.sqrt(np.clip(np.sort(eigs.real)[::-1], 0.0, None))
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


def purity(state: TwoPhotonState) -> float:
    """Tr(rho^2), between 0.25 (maximally mixed) and 1 (pure)."""
    return float(np.trace(state.rho @ state.rho).real)


def fidelity(state: TwoPhotonState, target_pure: TwoPhotonState) -> float:
    """<psi| rho |psi> against a pure target state."""
    if abs(purity(target_pure) - 1.0) > 1e-8:
        raise ValueError("fidelity target must be a pure state")
    vals, vecs = np.linalg.eigh(target_pure.rho)
    psi = vecs[:, int(np.argmax(vals))]
    return float((psi.conj() @ state.rho @ psi).real)
