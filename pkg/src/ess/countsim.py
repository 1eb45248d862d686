"""Stochastic photon-count engine and the rate algebra built on it.

Pair emission is a homogeneous Poisson process; each photon independently
passes an optional polarization analyzer (jointly with its partner, per the
two-photon state), survives detection with its channel efficiency, picks up
Gaussian timing jitter, is merged with dark counts, and finally passes a
non-paralyzable dead-time filter.  Timestamps are integer picosecond ticks.

Generation is partitioned into fixed 1-second blocks, each seeded from
(master seed, block index), so blocks can be produced in any order or in
parallel and concatenate identically; the dead-time filter runs as a final
sequential pass per channel.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import measurement
from .state import (ImperfectionParams, TwoPhotonState, source_state,
                    state_for_average_visibility)

PS_PER_S = 1_000_000_000_000
BLOCK_S = 1.0

SIGNAL_CHANNEL = 0
IDLER_CHANNEL = 1

TTAG_MAGIC = b"TTAG"
TTAG_VERSION = 1


@dataclass(frozen=True)
class DetectorParams:
    """One detection channel: total efficiency, darks, dead time, jitter."""

    efficiency: float
    dark_rate_cps: float
    dead_time_ns: float
    jitter_sigma_ps: float

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.dark_rate_cps < 0 or self.dead_time_ns < 0 or self.jitter_sigma_ps < 0:
            raise ValueError("dark rate, dead time and jitter must be >= 0")


@dataclass(frozen=True)
class SourceParams:
    """Source brightness, pump power and the state-imperfection template.

    visibility_v0 / visibility_k_per_mw parameterize the phenomenological
    basis-averaged visibility model V(P) = V0 exp(-k P).
    """

    pgr_per_mw: float
    pump_power_mw: float
    visibility_v0: float = 1.0
    visibility_k_per_mw: float = 0.0
    state_params: ImperfectionParams = field(default_factory=ImperfectionParams)

    def __post_init__(self):
        if self.pgr_per_mw < 0 or self.pump_power_mw < 0:
            raise ValueError("rates and powers must be >= 0")
        if not 0.0 <= self.visibility_v0 <= 1.0:
            raise ValueError("visibility_v0 must lie in [0, 1]")

    def pair_rate(self) -> float:
        return self.pgr_per_mw * self.pump_power_mw

    def average_visibility(self, power_mw=None) -> float:
        p = self.pump_power_mw if power_mw is None else power_mw
        return self.visibility_v0 * math.exp(-self.visibility_k_per_mw * p)

    def state_at_power(self, power_mw=None) -> TwoPhotonState:
        """Source state with noise set by the visibility-vs-power model."""
        if self.visibility_v0 == 1.0 and self.visibility_k_per_mw == 0.0:
            return source_state(self.state_params)
        return state_for_average_visibility(
            self.average_visibility(power_mw), self.state_params.coherence_factor)

    def at_power(self, power_mw: float) -> "SourceParams":
        return SourceParams(self.pgr_per_mw, power_mw, self.visibility_v0,
                            self.visibility_k_per_mw, self.state_params)


@dataclass(frozen=True)
class TimeTagStream:
    """Strictly increasing integer-ps event times on one channel."""

    channel: int
    times_ps: np.ndarray
    duration_s: float | None = None

    def __post_init__(self):
        times = np.ascontiguousarray(self.times_ps, dtype=np.int64)
        if times.ndim != 1:
            raise ValueError("times must be a 1-d array")
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times_ps", times)

    def rate_cps(self) -> float:
        if self.duration_s is None:
            raise ValueError("stream carries no duration")
        return self.times_ps.size / self.duration_s


@dataclass(frozen=True)
class CountRecord:
    """Singles, coincidence and accidental rates of one measurement."""

    singles_signal_cps: float
    singles_idler_cps: float
    coincidences_cps: float
    accidentals_cps: float
    duration_s: float
    window_ns: float

    def __post_init__(self):
        for name in ("singles_signal_cps", "singles_idler_cps",
                     "coincidences_cps", "accidentals_cps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.duration_s <= 0 or self.window_ns <= 0:
            raise ValueError("duration and window must be > 0")
        ceiling = min(self.singles_signal_cps, self.singles_idler_cps)
        if self.coincidences_cps > ceiling + self.accidentals_cps + 1e-9:
            raise ValueError("coincidence rate exceeds the singles ceiling")

    def corrected_cps(self) -> float:
        return self.coincidences_cps - self.accidentals_cps


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _dead_time_keep(times, min_sep_ps):
    keep = np.zeros(times.size, dtype=np.bool_)
    last = np.int64(-(1 << 62))
    for i in range(times.size):
        if times[i] - last >= min_sep_ps:
            keep[i] = True
            last = times[i]
    return keep


@njit(cache=True)
def _match_count(ts, ti, window_ps):
    j = 0
    k = 0
    count = 0
    while j < ts.size and k < ti.size:
        dt = ti[k] - ts[j]
        if 2 * dt > window_ps:
            j += 1
        elif -2 * dt > window_ps:
            k += 1
        else:
            count += 1
            j += 1
            k += 1
    return count


def apply_dead_time(times_ps: np.ndarray, dead_time_ns: float) -> np.ndarray:
    """Non-paralyzable dead-time filter; also enforces strict time order."""
    times = np.ascontiguousarray(times_ps, dtype=np.int64)
    min_sep = max(int(round(dead_time_ns * 1000.0)), 1)
    if times.size == 0:
        return times
    return times[_dead_time_keep(times, np.int64(min_sep))]


def brute_force_coincidence_count(signal_ps, idler_ps, window_ns: float) -> int:
    """O(n*m) reference matcher: each signal, in time order, takes the
    earliest unconsumed idler within +-window/2.  Oracle for the fast path."""
    window_ps = int(round(window_ns * 1000.0))
    idler = list(idler_ps)
    used = [False] * len(idler)
    count = 0
    for t in signal_ps:
        for m, u in enumerate(idler):
            if not used[m] and 2 * abs(int(u) - int(t)) <= window_ps:
                used[m] = True
                count += 1
                break
    return count


# ---------------------------------------------------------------------------
# stream generation


def _seed_key(seed) -> list:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def _joint_pass_probabilities(state: TwoPhotonState, proj_s, proj_i):
    eye = np.eye(2)
    p_both = measurement.coincidence_probability(state, proj_s, proj_i)
    p_s = measurement.coincidence_probability(state, proj_s, eye)
    p_i = measurement.coincidence_probability(state, eye, proj_i)
    return p_both, p_s, p_i


def generate_timetags(src: SourceParams, det_signal: DetectorParams,
                      det_idler: DetectorParams, duration_s: float, seed,
                      analyzers=None, state: TwoPhotonState | None = None):
    """Simulated (signal, idler) time-tag streams.

    ``analyzers`` optionally holds a (signal, idler) projector pair; each
    generated pair then passes the analyzers jointly, with probabilities
    from ``state`` (default: the source state at the configured power).
    """
    if duration_s <= 0:
        raise ValueError("duration must be > 0")
    key = _seed_key(seed)
    rate = src.pair_rate()
    if analyzers is not None:
        if state is None:
            state = src.state_at_power()
        p_both, p_s, p_i = _joint_pass_probabilities(state, *analyzers)
    else:
        p_both = p_s = p_i = 1.0

    sig_parts, idl_parts = [], []
    n_blocks = int(math.ceil(duration_s / BLOCK_S - 1e-12))
    for b in range(n_blocks):
        block_len = min(BLOCK_S, duration_s - b * BLOCK_S)
        rng = np.random.default_rng(key + [b])
        n_pairs = rng.poisson(rate * block_len)
        t_pairs = rng.uniform(0.0, block_len, n_pairs) + b * BLOCK_S

        if analyzers is not None:
            u = rng.uniform(size=n_pairs)
            pass_s = u < p_s
            pass_i = (u < p_both) | ((u >= p_s) & (u < p_s + p_i - p_both))
        else:
            pass_s = pass_i = np.ones(n_pairs, dtype=bool)
        keep_s = pass_s & (rng.uniform(size=n_pairs) < det_signal.efficiency)
        keep_i = pass_i & (rng.uniform(size=n_pairs) < det_idler.efficiency)

        t_sig = t_pairs[keep_s]
        t_idl = t_pairs[keep_i]
        t_sig = t_sig + rng.normal(0.0, det_signal.jitter_sigma_ps * 1e-12, t_sig.size)
        t_idl = t_idl + rng.normal(0.0, det_idler.jitter_sigma_ps * 1e-12, t_idl.size)

        n_dark_s = rng.poisson(det_signal.dark_rate_cps * block_len)
        d_sig = rng.uniform(0.0, block_len, n_dark_s) + b * BLOCK_S
        n_dark_i = rng.poisson(det_idler.dark_rate_cps * block_len)
        d_idl = rng.uniform(0.0, block_len, n_dark_i) + b * BLOCK_S

        sig_parts.append(np.concatenate([t_sig, d_sig]))
        idl_parts.append(np.concatenate([t_idl, d_idl]))

    streams = []
    for channel, parts, det in ((SIGNAL_CHANNEL, sig_parts, det_signal),
                                (IDLER_CHANNEL, idl_parts, det_idler)):
        t = np.concatenate(parts) if parts else np.empty(0)
        ticks = np.rint(t * PS_PER_S).astype(np.int64)
        ticks = ticks[(ticks >= 0) & (ticks <= int(round(duration_s * PS_PER_S)))]
        ticks.sort()
        ticks = apply_dead_time(ticks, det.dead_time_ns)
        streams.append(TimeTagStream(channel, ticks, duration_s))
    return streams[0], streams[1]


# ---------------------------------------------------------------------------
# rate algebra


def count_coincidences(signal: TimeTagStream, idler: TimeTagStream,
                       window_ns: float, duration_s=None) -> CountRecord:
    """Greedy two-pointer coincidence counting over sorted streams.

    Signal/idler events within +-window/2 pair up, each event consumed at
    most once, earliest-available first; runs in O(n_s + n_i).
    """
    if duration_s is None:
        duration_s = signal.duration_s if signal.duration_s is not None else idler.duration_s
    if duration_s is None:
        raise ValueError("no duration available; pass duration_s explicitly")
    window_ps = np.int64(round(window_ns * 1000.0))
    matched = int(_match_count(signal.times_ps, idler.times_ps, window_ps))
    s_rate = signal.times_ps.size / duration_s
    i_rate = idler.times_ps.size / duration_s
    return CountRecord(
        singles_signal_cps=s_rate,
        singles_idler_cps=i_rate,
        coincidences_cps=matched / duration_s,
        accidentals_cps=accidentals(s_rate, i_rate, window_ns),
        duration_s=duration_s,
        window_ns=window_ns,
    )


def accidentals(singles_signal_cps: float, singles_idler_cps: float,
                window_ns: float) -> float:
    """Chance-coincidence rate S_s * S_i * window."""
    if singles_signal_cps < 0 or singles_idler_cps < 0 or window_ns < 0:
        raise ValueError("inputs must be >= 0")
    return singles_signal_cps * singles_idler_cps * window_ns * 1e-9


def heralding(coincidences_cps: float, singles_cps: float) -> float:
    """Heralding efficiency C / S."""
    if singles_cps <= 0:
        raise ValueError("heralding undefined for zero singles rate")
    return coincidences_cps / singles_cps


def pgr(singles_signal_cps: float, singles_idler_cps: float,
        coincidences_cps: float) -> float:
    """Inferred pair-generation rate S_s * S_i / C."""
    if coincidences_cps <= 0:
        raise ValueError("pair-generation rate undefined for zero coincidences")
    return singles_signal_cps * singles_idler_cps / coincidences_cps


def deadtime_throughput(true_rate_cps: float, dead_time_ns: float) -> float:
    """Registered rate of a non-paralyzable detector, r / (1 + r tau)."""
    if true_rate_cps < 0 or dead_time_ns < 0:
        raise ValueError("inputs must be >= 0")
    return true_rate_cps / (1.0 + true_rate_cps * dead_time_ns * 1e-9)


# ---------------------------------------------------------------------------
# power sweep (the full per-power measurement pipeline)

# per basis: two correlated projection combos, then the two anticorrelated
_BASIS_COMBOS = {
    "rectilinear": (("H", "H"), ("V", "V"), ("H", "V"), ("V", "H")),
    "diagonal": (("D", "A"), ("A", "D"), ("D", "D"), ("A", "A")),
    "circular": (("R", "R"), ("L", "L"), ("R", "L"), ("L", "R")),
}


@dataclass(frozen=True)
class PowerPoint:
    power_mw: float
    record: CountRecord
    visibility: float | None
    basis_visibilities: dict


def power_sweep(src: SourceParams, powers_mw, det_signal: DetectorParams,
                det_idler: DetectorParams, duration_s: float, seed,
                window_ns: float) -> list[PowerPoint]:
    """Simulated singles/coincidence rates and visibilities per pump power.

    For each power the state follows the visibility-vs-power model; each of
    the three conjugate bases is measured through its four projection
    combinations, mirroring the summed-and-averaged bookkeeping of the
    measured rate curves.  Raw coincidences keep their accidentals;
    visibilities are computed from the raw rates.
    """
    if not powers_mw:
        raise ValueError("powers list must not be empty")
    key = _seed_key(seed)
    points = []
    for p_idx, power in enumerate(powers_mw):
        src_p = src.at_power(power)
        state = src_p.state_at_power()
        singles_s, singles_i, raw, acc = [], [], [], []
        basis_vis = {}
        total_coinc = 0.0
        for b_idx, (basis, combos) in enumerate(_BASIS_COMBOS.items()):
            rates = []
            combo_records = []
            for c_idx, (ls, li) in enumerate(combos):
                proj = (measurement.named_projector(ls), measurement.named_projector(li))
                sig, idl = generate_timetags(
                    src_p, det_signal, det_idler, duration_s,
                    key + [p_idx, b_idx, c_idx], analyzers=proj, state=state)
                rec = count_coincidences(sig, idl, window_ns)
                combo_records.append(rec)
                rates.append(rec.coincidences_cps)
            c1, c2, a1, a2 = rates
            total_coinc += sum(rates)
            denom = sum(rates)
            basis_vis[basis] = ((c1 + c2 - a1 - a2) / denom) if denom > 0 else None
            singles_s.append(combo_records[0].singles_signal_cps
                             + combo_records[1].singles_signal_cps)
            singles_i.append(combo_records[0].singles_idler_cps
                             + combo_records[1].singles_idler_cps)
            raw.append(c1 + c2)
            acc.append(combo_records[0].accidentals_cps + combo_records[1].accidentals_cps)
        record = CountRecord(
            singles_signal_cps=float(np.mean(singles_s)),
            singles_idler_cps=float(np.mean(singles_i)),
            coincidences_cps=float(np.mean(raw)),
            accidentals_cps=float(np.mean(acc)),
            duration_s=duration_s,
            window_ns=window_ns,
        )
        if total_coinc > 0 and all(v is not None for v in basis_vis.values()):
            visibility = float(np.mean([v for v in basis_vis.values()]))
        else:
            visibility = None
        points.append(PowerPoint(power, record, visibility, basis_vis))
    return points


# ---------------------------------------------------------------------------
# time-tag file format


def write_timetag_file(path, stream: TimeTagStream):
    """Binary format: magic "TTAG", u16 version, u16 channel, u64 ps ticks."""
    if stream.times_ps.size and stream.times_ps[0] < 0:
        raise ValueError("negative timestamps cannot be stored as u64")
    with open(path, "wb") as fh:
        fh.write(TTAG_MAGIC)
        fh.write(struct.pack("<HH", TTAG_VERSION, stream.channel))
        fh.write(stream.times_ps.astype("<u8").tobytes())


def read_timetag_file(path) -> TimeTagStream:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != TTAG_MAGIC:
            raise ValueError(f"not a time-tag file: bad magic {magic!r}")
        version, channel = struct.unpack("<HH", fh.read(4))
        if version != TTAG_VERSION:
            raise ValueError(f"unsupported time-tag file version {version}")
        times = np.frombuffer(fh.read(), dtype="<u8").astype(np.int64)
    return TimeTagStream(channel, times, None)


def export_timetag_csv(path, *streams: TimeTagStream):
    with open(path, "w") as fh:
        fh.write("channel,time_ps\n")
        for stream in streams:
            for t in stream.times_ps:
                fh.write(f"{stream.channel},{int(t)}\n")
