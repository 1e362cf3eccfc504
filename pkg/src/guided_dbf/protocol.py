"""Signal-level simulation of the synchronization and feedback protocol.

One protocol round plays the three over-the-air stages between the DBF
radios and the radio providing feedback (the guide, or the destination):

  stage 1  the feedback radio transmits a burst of sync preambles; every
           DBF radio estimates its frequency offset (one-shot per preamble,
           Kalman-averaged) and its timing offset (correlation plus
           sub-sample interpolation), then corrects both digitally;
  stage 2  each DBF radio transmits a channel-estimation preamble in its
           slot; the feedback radio estimates the channel phase and feeds
           it back over an error-free side channel;
  stage 3  the radios transmit the payload, precoded with the conjugated
           phase estimates; the combining gain is measured on the
           beamformed segment.

Residual frequency error leaks back in as phase drift between the
channel-estimation slot and the payload, which is what degrades the gain
as the feedback link SNR drops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .beamforming import GuideModel, WeightVector
from .channel import (ChannelRealization, LinkBudget, los_phase_cycles,
                      received_snr, ricean_sample)
from .geometry import Placement


class PreambleNotFoundError(RuntimeError):
    """Sync metric never crossed the detection threshold."""


class NoDetectionError(RuntimeError):
    """Correlation peak below the detection threshold."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Waveform layout and receiver constants for one protocol round.

    The sync preamble is two identical pseudo-noise halves, repeated
    ``sync_repeats`` times with distinct content per repetition so the
    full burst correlates without ambiguity. Stage slot offsets are
    config-defined; the guard times inside each stage absorb timing
    uncertainty. The third stage stretches beyond its nominal budget when
    the per-radio segments of a large swarm do not fit.
    """

    sample_rate_hz: float = 1e6
    sync_preamble_len: int = 630          # two identical 315-sample halves
    sync_repeats: int = 16
    chanest_preamble_len: int = 200
    stage1_ms: float = 60.0
    stage2_ms: float = 20.0
    stage3_ms: float = 30.0
    individual_segment_len: int = 4000    # all-ones, one slot per radio
    bf_ones_len: int = 4000
    bf_data_len: int = 10000              # BPSK, root-raised-cosine shaped
    samples_per_symbol: int = 2
    rrc_rolloff: float = 0.25
    rrc_span_symbols: int = 8
    cfo_prior_hz: float = 1000.0          # inside the +-1587 Hz unambiguous range
    timing_guard_samples: int = 64
    sync_detect_threshold: float = 0.2
    toa_detect_threshold: float = 0.15
    toa_upsample: int = 16
    kalman_q_hz2: float = 0.01
    kalman_r_hz2: float = 625.0
    preamble_seed: int = 101              # fixed pseudo-noise seed
    payload_seed: int = 202

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def half_len(self) -> int:
        return self.sync_preamble_len // 2

    @property
    def bf_segment_len(self) -> int:
        return self.bf_ones_len + self.bf_data_len


@dataclass(frozen=True)
class Impairment:
    """Carrier, timing, phase, and noise impairments of one link."""

    cfo_hz: float = 0.0
    timing_offset_s: float = 0.0
    channel_phase_rad: float = 0.0
    snr_db: float | None = None           # None or +inf means noiseless


@dataclass
class IQFrame:
    """Complex baseband samples with their rate and nominal start time."""

    samples: np.ndarray
    sample_rate_hz: float
    origin: str = ""
    start_time_s: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)

    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class CfoTrackerState:
    """Scalar Kalman state over the frequency offset."""

    freq_hz: float = 0.0
    var_hz2: float = 1e12


def _qpsk_chips(rng, n: int) -> np.ndarray:
    return np.exp(1j * (math.pi / 4.0 + math.pi / 2.0 * rng.integers(0, 4, n)))


def _seeded(*parts: int) -> np.random.Generator:
    return np.random.default_rng([int(p) for p in parts])


def gen_sync_preamble(cfg: ProtocolConfig, index: int = 0) -> IQFrame:
    """One sync preamble: unit-power PN chips, second half equal to the first.

    ``index`` selects the repetition within the burst; each repetition has
    distinct content (same fixed seed family) so the concatenated burst has
    a clean full-length autocorrelation.
    """
    rng = _seeded(cfg.preamble_seed, 7, index)
    half = _qpsk_chips(rng, cfg.half_len)
    return IQFrame(np.tile(half, 2), cfg.sample_rate_hz,
                   origin=f"sync[{index}]")


@lru_cache(maxsize=8)
def _sync_burst(cfg: ProtocolConfig) -> np.ndarray:
    return np.concatenate([gen_sync_preamble(cfg, r).samples
                           for r in range(cfg.sync_repeats)])


@lru_cache(maxsize=8)
def _chanest_preamble(cfg: ProtocolConfig) -> np.ndarray:
    rng = _seeded(cfg.preamble_seed, 13)
    return _qpsk_chips(rng, cfg.chanest_preamble_len)


def _rrc_taps(beta: float, sps: int, span: int) -> np.ndarray:
    n = span * sps
    t = (np.arange(n + 1) - n / 2) / sps
    taps = np.empty_like(t)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 - beta + 4.0 * beta / math.pi
        elif beta > 0 and abs(abs(4.0 * beta * ti) - 1.0) < 1e-9:
            taps[i] = (beta / math.sqrt(2.0)
                       * ((1 + 2 / math.pi) * math.sin(math.pi / (4 * beta))
                          + (1 - 2 / math.pi) * math.cos(math.pi / (4 * beta))))
        else:
            num = (math.sin(math.pi * ti * (1 - beta))
                   + 4 * beta * ti * math.cos(math.pi * ti * (1 + beta)))
            den = math.pi * ti * (1 - (4 * beta * ti) ** 2)
            taps[i] = num / den
    return taps / np.linalg.norm(taps)


@lru_cache(maxsize=8)
def _bf_segment(cfg: ProtocolConfig) -> np.ndarray:
    """Beamforming payload: all-ones head plus RRC-shaped BPSK, unit RMS."""
    rng = _seeded(cfg.payload_seed, 29)
    n_sym = cfg.bf_data_len // cfg.samples_per_symbol
    symbols = 2.0 * rng.integers(0, 2, n_sym) - 1.0
    up = np.zeros(n_sym * cfg.samples_per_symbol)
    up[::cfg.samples_per_symbol] = symbols
    data = np.convolve(up, _rrc_taps(cfg.rrc_rolloff, cfg.samples_per_symbol,
                                     cfg.rrc_span_symbols), mode="same")
    data = data / np.sqrt(np.mean(np.abs(data) ** 2))
    return np.concatenate([np.ones(cfg.bf_ones_len), data]).astype(complex)


def _good_fft_len(n: int) -> int:
    """Smallest 5-smooth length >= n (keeps pocketfft on fast radices)."""
    best = 1 << (n - 1).bit_length()
    two = 1
    while two < 4 * best:
        three = two
        while three < 4 * best:
            five = three
            while five < 4 * best:
                if five >= n:
                    best = min(best, five)
                five *= 5
            three *= 3
        two *= 2
    return best


def _fractional_delay(x: np.ndarray, shift_samples: float) -> np.ndarray:
    """Band-limited delay by a possibly fractional number of samples.

    Circular via FFT; callers keep guard zeros around the content so the
    wrapped tail stays silent.
    """
    if shift_samples == 0.0:
        return x.copy()
    n = len(x)
    freqs = np.fft.fftfreq(n)
    return np.fft.ifft(np.fft.fft(x) * np.exp(-2j * np.pi * freqs * shift_samples))


def _batched_delay(base_spectrum: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Delay one spectrum by a different fractional shift per row."""
    n = len(base_spectrum)
    freqs = np.fft.fftfreq(n)
    return np.fft.ifft(base_spectrum[None, :]
                       * np.exp(-2j * np.pi * freqs[None, :] * shifts[:, None]),
                       axis=1)


def apply_impairments(frame: IQFrame, imp: Impairment, rng=None) -> IQFrame:
    """Delay, frequency-shift, phase-rotate, and add noise to a frame.

    The CFO ramp uses absolute time (frame start plus sample index), so
    residual offsets accumulate phase consistently across stages. Noise is
    complex Gaussian sized for the given per-sample SNR against a
    unit-power signal.
    """
    x = _fractional_delay(frame.samples,
                          imp.timing_offset_s * frame.sample_rate_hz)
    t = frame.start_time_s + np.arange(len(x)) / frame.sample_rate_hz
    x = x * np.exp(1j * (2.0 * np.pi * imp.cfo_hz * t + imp.channel_phase_rad))
    if imp.snr_db is not None and not math.isinf(imp.snr_db):
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        sigma2 = 10.0 ** (-imp.snr_db / 10.0)
        x = x + math.sqrt(sigma2 / 2.0) * (rng.standard_normal(len(x))
                                           + 1j * rng.standard_normal(len(x)))
    return IQFrame(x, frame.sample_rate_hz, origin=frame.origin,
                   start_time_s=frame.start_time_s)


def _halves_metric(r: np.ndarray, half: int):
    """Sliding correlation of each window's two halves, and window energy.

    Works on the last axis, so a whole batch of frames goes through one
    pass.
    """
    prod = np.conj(r[..., :-half]) * r[..., half:]
    pad = [(0, 0)] * (r.ndim - 1) + [(1, 0)]
    c = np.cumsum(np.pad(prod, pad), axis=-1)
    p = c[..., half:] - c[..., :-half]
    e = np.cumsum(np.pad(np.abs(r) ** 2, pad), axis=-1)
    energy = e[..., 2 * half:] - e[..., :-2 * half]
    return p, energy


def estimate_cfo(rx: IQFrame, cfg: ProtocolConfig) -> float:
    """One-shot frequency-offset estimate from a sync preamble in ``rx``.

    Locates the preamble with the CFO-immune two-halves metric, then reads
    the offset from the phase of the halves correlation. Unambiguous over
    +-1/(2 * 315 * Ts), about +-1587 Hz at 1 Msps.
    """
    half = cfg.half_len
    if len(rx.samples) < 2 * half:
        raise PreambleNotFoundError("frame shorter than a sync preamble")
    p, energy = _halves_metric(rx.samples, half)
    with np.errstate(divide="ignore", invalid="ignore"):
        metric = 2.0 * np.abs(p) / np.maximum(energy, 1e-300)
    d = int(np.argmax(metric))
    if metric[d] < cfg.sync_detect_threshold:
        raise PreambleNotFoundError(
            f"halves metric {metric[d]:.3f} below threshold "
            f"{cfg.sync_detect_threshold}")
    return float(np.angle(p[d])
                 / (2.0 * np.pi * half * cfg.sample_period_s))


def cfo_tracker_update(state: CfoTrackerState, measurement_hz: float,
                       q_hz2: float = 0.01,
                       r_hz2: float = 625.0) -> CfoTrackerState:
    """Scalar Kalman update over the frequency offset.

    Random-walk process noise ``q_hz2`` and measurement noise ``r_hz2``;
    with q = 0 the filter reduces to a running average of the
    measurements, and its steady-state variance sits below the
    single-shot variance.
    """
    var = state.var_hz2 + q_hz2
    k = var / (var + r_hz2)
    return CfoTrackerState(freq_hz=state.freq_hz + k * (measurement_hz - state.freq_hz),
                           var_hz2=(1.0 - k) * var)


def _fft_upsample(x: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited interpolation of an odd-length segment."""
    n = len(x)
    h = n // 2
    spec = np.fft.fft(x)
    out = np.zeros(n * factor, dtype=complex)
    out[:h + 1] = spec[:h + 1]
    out[-h:] = spec[-h:]
    return np.fft.ifft(out) * factor


def _refine_peak(corr: np.ndarray, k0: int, upsample: int) -> float:
    """Sub-sample peak position of |corr| around integer lag ``k0``.

    The correlation is interpolated band-limited (zero-padded FFT) over a
    short window and the vertex of a quadratic fit on the fine grid gives
    the fractional offset, the maximum-likelihood surrogate used here.
    """
    w = 16
    lo, hi = max(0, k0 - w), min(len(corr), k0 + w + 1)
    seg = corr[lo:hi]
    if len(seg) % 2 == 0:          # keep the interpolation window odd
        seg = seg[:-1]
    fine = np.abs(_fft_upsample(seg, upsample))
    j = int(np.argmax(fine))
    if 0 < j < len(fine) - 1:      # quadratic vertex on the fine grid
        y0, y1, y2 = fine[j - 1], fine[j], fine[j + 1]
        denom = y0 - 2.0 * y1 + y2
        frac = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
    else:
        frac = 0.0
    return lo + (j + frac) / upsample


def estimate_toa(rx: IQFrame, template: IQFrame,
                 cfg: ProtocolConfig | None = None) -> float:
    """Time of arrival of ``template`` within ``rx``, in seconds.

    Integer lag from the peak of the full cross-correlation, refined to
    sub-sample accuracy by maximizing the interpolated correlation
    magnitude (see ``_refine_peak``).
    """
    cfg = cfg or ProtocolConfig(sample_rate_hz=rx.sample_rate_hz)
    r = rx.samples
    s = template.samples
    if len(s) > len(r):
        raise NoDetectionError("template longer than the frame")
    fft_len = _good_fft_len(len(r))
    corr = np.fft.ifft(np.fft.fft(r, fft_len)
                       * np.conj(np.fft.fft(s, fft_len)))[:len(r) - len(s) + 1]
    mag = np.abs(corr)
    k0 = int(np.argmax(mag))
    e = np.concatenate([[0.0], np.cumsum(np.abs(r) ** 2)])
    win_energy = float(e[k0 + len(s)] - e[k0])
    norm = math.sqrt(win_energy * float(np.sum(np.abs(s) ** 2)))
    if norm == 0.0 or mag[k0] / norm < cfg.toa_detect_threshold:
        raise NoDetectionError("correlation peak below detection threshold")
    toa_samples = _refine_peak(corr, k0, cfg.toa_upsample)
    return float(toa_samples / rx.sample_rate_hz)


def estimate_channel_phase(rx: IQFrame, template: IQFrame) -> float:
    """Phase of the channel carrying ``template``, timing already corrected.

    The inner product against the known preamble averages the noise down;
    the result wraps to (-pi, pi].
    """
    n = min(len(rx.samples), len(template.samples))
    return float(np.angle(np.vdot(template.samples[:n], rx.samples[:n])))


@dataclass
class ProtocolRoundResult:
    """Outcome of one protocol round.

    ``weights`` holds each radio's effective transmit phase at the middle
    of the beamformed payload segment, residual drift included, so the
    same round can be re-evaluated against any receiver's channels (in
    guide-feedback mode index 0 is the guide's own transmit phase).
    ``gamma_feedback`` is the combining gain measured at the feedback
    radio from the impaired payload waveforms; ``channels`` are the
    feedback-link gains of the transmitting radios (unit placeholder for
    the guide in guide mode).
    """

    weights: WeightVector
    gamma_feedback: float
    channels: ChannelRealization
    cfo_errors_hz: np.ndarray
    toa_errors_samples: np.ndarray
    phase_estimates_rad: np.ndarray
    failures: np.ndarray
    snr_stage1_db: np.ndarray
    snr_stage2_db: np.ndarray


def _dump_iq(path: Path, samples: np.ndarray):
    out = np.empty(2 * len(samples), dtype="<f4")
    out[0::2] = samples.real
    out[1::2] = samples.imag
    out.tofile(path)


@lru_cache(maxsize=8)
def _stage_constants(cfg: ProtocolConfig):
    """Precomputed spectra and templates shared by every round."""
    guard = cfg.timing_guard_samples
    burst = _sync_burst(cfg)
    n1 = _good_fft_len(len(burst) + 2 * guard)
    frame1 = np.zeros(n1, dtype=complex)
    frame1[guard:guard + len(burst)] = burst
    chanest = _chanest_preamble(cfg)
    n2 = cfg.chanest_preamble_len + 2 * guard
    frame2 = np.zeros(n2, dtype=complex)
    frame2[guard:guard + len(chanest)] = chanest
    bf = _bf_segment(cfg)
    n3 = _good_fft_len(len(bf) + 2 * guard)
    frame3 = np.zeros(n3, dtype=complex)
    frame3[guard:guard + len(bf)] = bf
    return {
        "burst": burst,
        "frame1_spec": np.fft.fft(frame1),
        "burst_spec": np.conj(np.fft.fft(burst, n1)),
        "burst_energy": float(np.sum(np.abs(burst) ** 2)),
        "chanest": chanest,
        "frame2_spec": np.fft.fft(frame2),
        "bf": bf,
        "bf_rms": math.sqrt(float(np.mean(np.abs(bf) ** 2))),
        "frame3_spec": np.fft.fft(frame3),
    }


def run_protocol_round(placement: Placement, feedback: str = "guide", *,
                       carrier, budget: LinkBudget | None = None,
                       cfg: ProtocolConfig | None = None,
                       link_k_db: float = math.inf,
                       guide_model: GuideModel | None = None,
                       snr_override_db: float | None = None,
                       rng=None, iq_dump_dir=None,
                       trial_tag: int = 0) -> ProtocolRoundResult:
    """Simulate stages 1-3 against the chosen feedback radio.

    With ``feedback="guide"`` the followers synchronize to the guide over
    meters-scale (high SNR) links; with ``feedback="destination"`` every
    DBF radio synchronizes to the destination, whose sync burst is sent at
    the destination transmit power while the channel-estimation preambles
    come back at the per-radio power. ``link_k_db`` sets the Ricean
    K-factor of the feedback links (inf = pure LOS). ``snr_override_db``
    pins both stages' link SNR regardless of geometry.

    A radio whose stage-1 detection fails keeps zero corrections; its
    payload arrives uncorrected, which is the real failure mode.
    """
    budget = budget or LinkBudget()
    cfg = cfg or ProtocolConfig()
    guide_model = guide_model or GuideModel()
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if feedback not in ("guide", "destination"):
        raise ValueError(f"unknown feedback radio {feedback!r}")

    pos = placement.positions()
    n = placement.n_radios
    if feedback == "guide":
        ref = pos[0]
        tx_idx = np.arange(1, n)           # followers sync to the guide
        ref_tx_power = budget.tx_power_dbm
    else:
        ref = placement.destination.as_array()
        tx_idx = np.arange(n)              # the whole swarm syncs to the destination
        ref_tx_power = budget.destination_tx_power_dbm
    n_tx = len(tx_idx)
    if n_tx == 0:
        raise ValueError("need at least one transmitting radio")

    link_d = np.linalg.norm(pos[tx_idx] - ref, axis=1)
    h_los = np.exp(2j * np.pi * los_phase_cycles(link_d, carrier.wavelength_m))
    links = ricean_sample(h_los, link_k_db, rng)
    link_phase = np.angle(links.h)
    link_fade_db = 20.0 * np.log10(np.maximum(np.abs(links.h), 1e-15))

    if snr_override_db is not None:
        snr1 = np.full(n_tx, float(snr_override_db))
        snr2 = np.full(n_tx, float(snr_override_db))
    else:
        snr1 = np.array([received_snr(d, budget, ref_tx_power) for d in link_d])
        snr2 = np.array([received_snr(d, budget, budget.tx_power_dbm) for d in link_d])

    ts = cfg.sample_period_s
    guard = cfg.timing_guard_samples
    cfo_true = rng.uniform(-cfg.cfo_prior_hz, cfg.cfo_prior_hz, n_tx)
    tau_true = rng.uniform(-guard / 2.0, guard / 2.0, n_tx)   # samples
    lo_phase = rng.uniform(0.0, 2.0 * math.pi, n_tx)

    # Stage timeline (seconds). Slot offsets are fixed constants of the
    # round; stage 3 stretches when a large swarm's segments exceed the
    # nominal budget.
    stage2_t0 = cfg.stage1_ms * 1e-3
    slot_period_s = cfg.stage2_ms * 1e-3 / n_tx
    stage3_t0 = (cfg.stage1_ms + cfg.stage2_ms) * 1e-3
    bf_t0 = stage3_t0 + n_tx * cfg.individual_segment_len * ts
    bf_mid = bf_t0 + 0.5 * cfg.bf_segment_len * ts

    const = _stage_constants(cfg)
    burst = const["burst"]
    chanest = const["chanest"]
    chanest_template = IQFrame(chanest, cfg.sample_rate_hz, origin="chanest")
    bf = const["bf"]

    dump_dir = Path(iq_dump_dir) if iq_dump_dir is not None else None
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)

    # --- Stage 1: sync burst from the feedback radio, received by every
    # DBF radio; link fading scales the received SNR while the reciprocal
    # channel phase is a constant the estimators ignore.
    rx1 = _batched_delay(const["frame1_spec"], tau_true)
    n1 = rx1.shape[1]
    t1 = np.arange(n1) * ts
    rx1 *= np.exp(1j * (-2.0 * np.pi * cfo_true[:, None] * t1[None, :]
                        + link_phase[:, None]))
    sigma1 = np.sqrt(10.0 ** (-(snr1 + link_fade_db) / 10.0) / 2.0)
    rx1 += sigma1[:, None] * (rng.standard_normal(rx1.shape)
                              + 1j * rng.standard_normal(rx1.shape))
    if dump_dir is not None:
        for j, radio in enumerate(tx_idx):
            _dump_iq(dump_dir / f"{trial_tag}_{radio}_1.iq", rx1[j])

    cfo_hat = np.zeros(n_tx)
    tau_hat = np.zeros(n_tx)
    failures = np.zeros(n_tx, dtype=bool)

    half = cfg.half_len
    p, energy = _halves_metric(rx1, half)
    with np.errstate(divide="ignore", invalid="ignore"):
        metric = 2.0 * np.abs(p) / np.maximum(energy, 1e-300)
    d_coarse = np.argmax(metric, axis=1)
    peak_metric = metric[np.arange(n_tx), d_coarse]
    coarse = (np.angle(p[np.arange(n_tx), d_coarse])
              / (2.0 * np.pi * half * ts))
    failures |= peak_metric < cfg.sync_detect_threshold

    derot = rx1 * np.exp(-2j * np.pi * coarse[:, None] * t1[None, :])
    corr = np.fft.ifft(np.fft.fft(derot, axis=1)
                       * const["burst_spec"][None, :], axis=1)
    search = corr[:, :n1 - len(burst) + 1]
    k0 = np.argmax(np.abs(search), axis=1)
    for j in range(n_tx):
        if failures[j]:
            continue
        win = derot[j, k0[j]:k0[j] + len(burst)]
        norm = math.sqrt(float(np.sum(np.abs(win) ** 2)) * const["burst_energy"])
        if norm == 0.0 or np.abs(search[j, k0[j]]) / norm < cfg.toa_detect_threshold:
            failures[j] = True
            continue
        toa = _refine_peak(search[j], int(k0[j]), cfg.toa_upsample)
        tau_hat[j] = toa - guard
        # Refined per-repetition one-shot estimates, Kalman-averaged.
        state = CfoTrackerState()
        base = int(round(toa))
        for rep in range(cfg.sync_repeats):
            w0 = base + rep * cfg.sync_preamble_len
            win = derot[j, w0:w0 + cfg.sync_preamble_len]
            if len(win) < cfg.sync_preamble_len:
                continue
            ph = np.vdot(win[:half], win[half:])
            meas = coarse[j] + float(np.angle(ph) / (2.0 * np.pi * half * ts))
            state = cfo_tracker_update(state, meas, q_hz2=cfg.kalman_q_hz2,
                                       r_hz2=cfg.kalman_r_hz2)
        cfo_hat[j] = state.freq_hz
    cfo_hat[failures] = 0.0        # stale corrections: nothing applied
    tau_hat[failures] = 0.0

    eps = cfo_true + cfo_hat       # residual CFO of the corrected radios
    dtau = tau_true - tau_hat      # residual slot misalignment, samples

    # --- Stage 2: channel-estimation slots, received at the feedback radio.
    rx2 = _batched_delay(const["frame2_spec"], dtau)
    n2 = rx2.shape[1]
    slot_t0 = stage2_t0 + np.arange(n_tx) * slot_period_s
    t2 = slot_t0[:, None] + (np.arange(n2) - guard)[None, :] * ts
    rx2 *= np.exp(1j * (2.0 * np.pi * eps[:, None] * t2
                        + (lo_phase + link_phase)[:, None]))
    sigma2 = np.sqrt(10.0 ** (-(snr2 + link_fade_db) / 10.0) / 2.0)
    rx2 += sigma2[:, None] * (rng.standard_normal(rx2.shape)
                              + 1j * rng.standard_normal(rx2.shape))
    phase_hat = np.empty(n_tx)
    for j, radio in enumerate(tx_idx):
        if dump_dir is not None:
            _dump_iq(dump_dir / f"{trial_tag}_{radio}_2.iq", rx2[j])
        window = IQFrame(rx2[j, guard:guard + cfg.chanest_preamble_len],
                         cfg.sample_rate_hz)
        phase_hat[j] = estimate_channel_phase(window, chanest_template)

    theta = -phase_hat

    # --- Stage 3: noise-free payload contributions at the feedback radio.
    # Per-radio magnitudes are constant, so the individual-segment
    # denominator is the analytic sum of |h| times the payload RMS.
    x3 = _batched_delay(const["frame3_spec"], dtau)[:, guard:guard + len(bf)]
    t3 = bf_t0 + np.arange(len(bf)) * ts
    x3 *= np.exp(1j * (2.0 * np.pi * eps[:, None] * t3[None, :]
                       + (theta + lo_phase)[:, None]))
    x3 *= links.h[:, None]
    if dump_dir is not None:
        for j, radio in enumerate(tx_idx):
            _dump_iq(dump_dir / f"{trial_tag}_{radio}_3.iq", x3[j])
    acc = x3.sum(axis=0)
    num = math.sqrt(float(np.mean(np.abs(acc) ** 2)))
    den = float(np.sum(np.abs(links.h))) * const["bf_rms"]
    gamma_fb = num / den

    # Effective transmit phases at the BF-segment midpoint, for evaluating
    # the same round at a different receiver.
    eff = np.zeros(n)
    eff[tx_idx] = theta + lo_phase + 2.0 * np.pi * eps * bf_mid
    if feedback == "guide":
        eff[0] = guide_model.guide_phase(rng)

    h_all = np.ones(n, dtype=complex)
    h_all[tx_idx] = links.h
    h_los_all = np.ones(n, dtype=complex)
    h_los_all[tx_idx] = links.h_los
    h_nlos_all = np.zeros(n, dtype=complex)
    h_nlos_all[tx_idx] = links.h_nlos
    channels = ChannelRealization(h=h_all, h_los=h_los_all, h_nlos=h_nlos_all,
                                  k_linear=links.k_linear)

    return ProtocolRoundResult(
        weights=WeightVector(eff),
        gamma_feedback=float(gamma_fb),
        channels=channels,
        cfo_errors_hz=eps,
        toa_errors_samples=dtau,
        phase_estimates_rad=phase_hat,
        failures=failures,
        snr_stage1_db=snr1,
        snr_stage2_db=snr2,
    )
