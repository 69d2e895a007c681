"""Experiment runner: seeded BER/SNR sweeps over distance presets, plus
spectrogram export for external plotting."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import channel, countermeasure, framing, modem_rx, modem_tx
from .channel import ChannelCondition, DeviceProfile, apply_channel, distance_to_snr
from .countermeasure import JammerConfig, jam_waveform, lowpass
from .modem_rx import DemodConfig, demodulate_stream
from .modem_tx import FskConfig, transmit_frames, uniform_tones
from .sigcore import DEFAULT_AUDIO_RATE, GyroTrace, Waveform, stft

DB_FLOOR = -120.0


@dataclass(frozen=True)
class ExperimentConfig:
    profile: str
    modulation: str = "bfsk"          # "bfsk" or "mfsk"
    order: int = 2
    bit_time: float = 0.7
    room: str = "open"
    distances_cm: Tuple[float, ...] = ()
    frames_per_point: int = 50
    seed: int = 0
    amplitude: float = modem_tx.DEFAULT_AMPLITUDE
    mfsk_band: Tuple[float, float] = (19000.0, 19105.0)
    jammer: Optional[JammerConfig] = None
    filter_cutoff: Optional[float] = None

    def __post_init__(self):
        if self.frames_per_point < 1:
            raise ValueError("frames_per_point must be >= 1")
        if self.modulation not in ("bfsk", "mfsk"):
            raise ValueError("modulation must be 'bfsk' or 'mfsk'")
        if self.modulation == "bfsk" and self.order != 2:
            raise ValueError("bfsk implies order 2")


@dataclass
class BerRow:
    distance_cm: float
    snr_db: float
    ber: float
    frame_loss: float
    frames_synced: int


@dataclass
class BerTable:
    rows: List[BerRow] = field(default_factory=list)

    def to_csv(self, destination) -> None:
        with Path(destination).open("w", newline="") as fp:
            fp.write("distance_cm,snr_db,ber_fraction,frame_loss_fraction\n")
            for r in self.rows:
                fp.write(f"{r.distance_cm:g},{r.snr_db:g},"
                         f"{r.ber:.6f},{r.frame_loss:.6f}\n")


def fsk_config_for(profile: DeviceProfile, cfg: ExperimentConfig) -> FskConfig:
    if cfg.modulation == "bfsk":
        return FskConfig(tone_freqs=profile.fsk_pair, bit_time=cfg.bit_time,
                         amplitude=cfg.amplitude)
    tones = uniform_tones(cfg.mfsk_band[0], cfg.mfsk_band[1], cfg.order)
    return FskConfig(tone_freqs=tones, bit_time=cfg.bit_time,
                     amplitude=cfg.amplitude)


def demod_config_for(profile: DeviceProfile, fsk: FskConfig,
                     fft_size: Optional[int] = None,
                     noverlap: Optional[int] = None) -> DemodConfig:
    g = []
    for f in fsk.tone_freqs:
        gf = channel.gyro_frequency(f, profile)
        if gf is None:
            raise channel.ChannelError(
                f"tone {f} Hz outside {profile.name}'s resonance band")
        g.append(gf)
    if fft_size is None:
        fft_size = 128 if fsk.order == 2 else 256
    if noverlap is None:
        noverlap = fft_size * 3 // 4
    return DemodConfig(bit_time=fsk.bit_time, g_freqs=tuple(g),
                       fft_size=fft_size, noverlap=noverlap)


def _point_seed(seed: int, *parts: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, *[p & 0xFFFFFFFF for p in parts]])


def run_point(profile: DeviceProfile, fsk: FskConfig, rxcfg: DemodConfig,
              snr_db: float, n_frames: int, seed: int, point_index: int,
              jammer: Optional[JammerConfig] = None,
              filter_cutoff: Optional[float] = None,
              sample_rate: int = DEFAULT_AUDIO_RATE) -> BerRow:
    """Simulate n_frames single-frame transmissions at one SNR point."""
    wrong_bits = 0
    synced = 0
    lost = 0
    for fi in range(n_frames):
        rng = _point_seed(seed, point_index, fi)
        payload = tuple(int(b) for b in rng.integers(0, 2, framing.PAYLOAD_BITS))
        wave = transmit_frames([payload], fsk, gap=0.0, sample_rate=sample_rate)
        if filter_cutoff is not None:
            wave = lowpass(wave, filter_cutoff)
        jam = None
        if jammer is not None:
            jam_cfg = JammerConfig(
                f_min=jammer.f_min, f_max=jammer.f_max, T=jammer.T,
                max_volume=jammer.max_volume, volume=jammer.volume,
                seed=int(rng.integers(0, 2 ** 31)),
                total_duration=wave.duration)
            jam = jam_waveform(jam_cfg, sample_rate)
        noise_seed = int(rng.integers(0, 2 ** 31))
        cond = ChannelCondition(snr_db=snr_db, noise_seed=noise_seed, jammer=jam)
        trace = apply_channel(wave, profile, cond)
        report = demodulate_stream(trace, rxcfg)
        if not report.frames:
            lost += 1
            continue
        frame = report.frames[0]
        synced += 1
        if not frame.parity_valid:
            lost += 1
        wrong_bits += sum(a != b for a, b in zip(frame.payload, payload))
    ber = wrong_bits / (framing.PAYLOAD_BITS * synced) if synced else 0.0
    return BerRow(distance_cm=0.0, snr_db=snr_db, ber=ber,
                  frame_loss=lost / n_frames, frames_synced=synced)


def run_ber_experiment(cfg: ExperimentConfig, profile_dir=None) -> BerTable:
    """Distance sweep: per distance, derive the SNR from the room preset
    and measure BER / frame loss over seeded random frames."""
    profile = channel.get_profile(cfg.profile, profile_dir)
    preset = channel.get_preset(cfg.profile, cfg.room)
    fsk = fsk_config_for(profile, cfg)
    rxcfg = demod_config_for(profile, fsk)
    distances = cfg.distances_cm or tuple(d for d, _ in preset.entries)
    table = BerTable()
    for di, dist in enumerate(distances):
        snr = distance_to_snr(preset, dist)
        row = run_point(profile, fsk, rxcfg, snr, cfg.frames_per_point,
                        cfg.seed, di, jammer=cfg.jammer,
                        filter_cutoff=cfg.filter_cutoff)
        row.distance_cm = dist
        table.rows.append(row)
    return table


def effective_data_rate(bit_time: float, gap: float = 0.5) -> Tuple[float, float]:
    """(payload bits/s, raw channel bits/s) for the 17-bit frame format."""
    payload_rate = framing.PAYLOAD_BITS / (framing.FRAME_BITS * bit_time + gap)
    return payload_rate, 1.0 / bit_time


def emit_spectrogram(source: Union[Waveform, GyroTrace], fft_size: int,
                     noverlap: int, destination) -> None:
    """CSV matrix: first row frequency bins (Hz), first column frame times
    (s), cells magnitude in dB."""
    if isinstance(source, Waveform):
        x, rate = source.samples, source.sample_rate
    else:
        from .sigcore import magnitude_stream
        x = magnitude_stream(source)
        x = x - x.mean()
        rate = source.sample_rate
    if len(x) == 0:
        raise ValueError("cannot emit a spectrogram of an empty input")
    spec = stft(x, fft_size, noverlap, window="hann", sample_rate=rate)
    db = 20 * np.log10(np.maximum(spec.magnitudes, 10 ** (DB_FLOOR / 20)))
    with Path(destination).open("w", newline="") as fp:
        fp.write("time_s," + ",".join(f"{f:.3f}" for f in spec.freqs) + "\n")
        for t, row in zip(spec.times, db):
            fp.write(f"{t:.6f}," + ",".join(f"{v:.2f}" for v in row) + "\n")


def load_experiment_config(source) -> ExperimentConfig:
    """Experiment description as a JSON document keyed by the field names."""
    with Path(source).open() as fp:
        doc = json.load(fp)
    jam = None
    if doc.get("jammer"):
        j = doc["jammer"]
        jam = JammerConfig(f_min=float(j["f_min"]), f_max=float(j["f_max"]),
                           T=float(j.get("T", 1.0)),
                           max_volume=float(j.get("max_volume", 0.2)),
                           seed=int(j.get("seed", 0)),
                           total_duration=float(j.get("total_duration", 10.0)),
                           volume=(float(j["volume"])
                                   if j.get("volume") is not None else None))
    return ExperimentConfig(
        profile=doc["profile"],
        modulation=doc.get("modulation", "bfsk"),
        order=int(doc.get("order", 2)),
        bit_time=float(doc.get("bit_time", 0.7)),
        room=doc.get("room", "open"),
        distances_cm=tuple(float(d) for d in doc.get("distances_cm", ())),
        frames_per_point=int(doc.get("frames_per_point", 50)),
        seed=int(doc.get("seed", 0)),
        amplitude=float(doc.get("amplitude", modem_tx.DEFAULT_AMPLITUDE)),
        mfsk_band=tuple(doc.get("mfsk_band", (19000.0, 19105.0))),
        jammer=jam,
        filter_cutoff=(float(doc["filter_cutoff"])
                       if doc.get("filter_cutoff") else None))
