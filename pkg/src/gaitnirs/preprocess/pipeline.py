"""The ordered preprocessing chain, from raw intensities to baseline-corrected epochs."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import N_CHANNELS, HemoSeries, RawRecording, SubjectMeta, Task, TaskEpoch
from ..errors import ConfigError, DataError, GaitNirsError
from .epochs import baseline_correct, extract_epoch
from .fir import FilterSpec, fir_lowpass
from .mara import MaraConfig, mara_spline
from .mbll import MbllParams, mbll_convert
from .qc import QcConfig, qc_channels
from .wavelet import WaveletConfig, wavelet_denoise

STAGES = ("qc", "wavelet", "mbll", "mara", "fir", "extract_epoch", "baseline_correct")


@dataclass(frozen=True)
class PipelineConfig:
    qc: QcConfig = field(default_factory=QcConfig)
    wavelet: WaveletConfig = field(default_factory=WaveletConfig)
    mbll: MbllParams = field(default_factory=MbllParams)
    mara: MaraConfig = field(default_factory=MaraConfig)
    fir: FilterSpec = field(default_factory=FilterSpec)

    @classmethod
    def passthrough(cls) -> PipelineConfig:
        """Only QC and MBLL act; every filter stage returns its input."""
        return cls(
            wavelet=WaveletConfig(enabled=False),
            mara=MaraConfig(enabled=False),
            fir=FilterSpec(enabled=False),
        )

    def as_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            obj = getattr(self, name)
            out[name] = {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.init}
        return out


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


_SECTIONS = {
    "qc": QcConfig,
    "wavelet": WaveletConfig,
    "mbll": MbllParams,
    "mara": MaraConfig,
    "fir": FilterSpec,
}


def _coerce(cls, section: str, key: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(cls) if f.init}
    if key not in fields:
        raise ConfigError(f"[{section}] unknown key {key!r}; expected one of {sorted(fields)}")
    default = fields[key].default
    if default is dataclasses.MISSING:
        raise ConfigError(f"[{section}] {key} cannot be set from a config file")
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "1", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(type(d)(v) for d, v in zip(default, raw.split(","), strict=True))
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def parse_sections(parser: configparser.ConfigParser, known: dict) -> dict:
    """Build dataclass instances for each known section present in ``parser``."""
    out = {}
    for section, cls in known.items():
        if parser.has_section(section):
            kwargs = {k: _coerce(cls, section, k, v) for k, v in parser.items(section)}
            out[section] = cls(**kwargs)
    return out


def read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parser


def pipeline_config_from_parser(parser: configparser.ConfigParser) -> PipelineConfig:
    return PipelineConfig(**parse_sections(parser, _SECTIONS))


def load_pipeline_config(path) -> PipelineConfig:
    """Read a ``key = value`` file with optional [qc] [wavelet] [mbll] [mara] [fir] sections."""
    return pipeline_config_from_parser(read_ini(path))


def _run_stage(stage: str, fn, *args):
    try:
        return fn(*args)
    except GaitNirsError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise


def to_hemo(rec: RawRecording, subject: SubjectMeta, cfg: PipelineConfig | None = None) -> HemoSeries:
    """qc -> wavelet (per wavelength) -> mbll -> mara -> fir over the whole recording."""
    cfg = cfg or PipelineConfig()
    valid = _run_stage("qc", qc_channels, rec, cfg.qc)
    n = rec.n_samples
    hbo2 = np.full((N_CHANNELS, n), np.nan)
    hb = np.full((N_CHANNELS, n), np.nan)
    for c in np.flatnonzero(valid):
        i730 = _run_stage("wavelet", wavelet_denoise, rec.i730[c], cfg.wavelet)
        i850 = _run_stage("wavelet", wavelet_denoise, rec.i850[c], cfg.wavelet)
        # denoising can push a near-dark sample to or below zero
        floor = np.finfo(float).tiny
        i730, i850 = np.maximum(i730, floor), np.maximum(i850, floor)
        o, r = _run_stage("mbll", mbll_convert, i730, i850, subject.age, cfg.mbll)
        o = _run_stage("mara", mara_spline, o, cfg.mara)
        r = _run_stage("mara", mara_spline, r, cfg.mara)
        hbo2[c] = _run_stage("fir", fir_lowpass, o, cfg.fir)
        hb[c] = _run_stage("fir", fir_lowpass, r, cfg.fir)
    return HemoSeries(rec.subject_id, hbo2, hb, valid)


def epochs_from_hemo(series: HemoSeries, rec: RawRecording) -> tuple[TaskEpoch, TaskEpoch]:
    out = []
    for task in (Task.STW, Task.DTW):
        marker = rec.marker(task)
        if marker is None:
            raise DataError(f"{rec.subject_id}: missing {task.value} marker", stage="extract_epoch")
        ep = _run_stage("extract_epoch", extract_epoch, series, marker)
        out.append(_run_stage("baseline_correct", baseline_correct, ep, series, marker))
    return out[0], out[1]


def run_pipeline(
    rec: RawRecording, subject: SubjectMeta, cfg: PipelineConfig | None = None
) -> tuple[TaskEpoch, TaskEpoch]:
    """Full chain; returns the (STW, DTW) baseline-corrected epochs."""
    if rec.subject_id != subject.subject_id:
        raise DataError(f"recording {rec.subject_id} paired with subject {subject.subject_id}")
    return epochs_from_hemo(to_hemo(rec, subject, cfg), rec)
