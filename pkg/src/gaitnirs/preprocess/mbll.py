"""Modified Beer-Lambert conversion between intensities and Δ[HbO2]/Δ[Hb].

Optical density uses base-10 logarithms to match the extinction table.
Concentrations are in µM; extinction coefficients in 1/(mM·cm).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..core import BASELINE_SAMPLES, WAVELENGTHS_NM
from ..errors import ConfigError, DataError

UM_PER_MM = 1000.0


def _load_table() -> dict:
    with resources.files("gaitnirs.data").joinpath("optics_v1.json").open() as fh:
        return json.load(fh)


OPTICS = _load_table()


def _default_epsilon() -> np.ndarray:
    ext = OPTICS["extinction_per_mM_cm"]
    # rows: wavelength (730, 850); columns: chromophore (HbO2, Hb)
    return np.array([[ext[str(w)]["hbo2"], ext[str(w)]["hb"]] for w in WAVELENGTHS_NM])


@dataclass(frozen=True)
class MbllParams:
    epsilon: np.ndarray = field(default_factory=_default_epsilon)
    separation_d: float = OPTICS["separation_cm"]
    dpf_coeffs: dict = field(default_factory=lambda: dict(OPTICS["dpf_coeffs"]))
    # multiplies the pathlength; 1.0 means no partial-volume correction
    partial_volume: float = 1.0
    ref_samples: int = BASELINE_SAMPLES

    def __post_init__(self):
        eps = np.array(self.epsilon, dtype=float)
        if eps.shape != (2, 2) or not np.all(np.isfinite(eps)) or np.any(eps <= 0):
            raise ConfigError("epsilon must be a strictly positive, finite 2x2 matrix", stage="mbll")
        if abs(np.linalg.det(eps)) < 1e-12 or not np.isfinite(np.linalg.cond(eps)):
            raise ConfigError("epsilon is singular", stage="mbll")
        if self.separation_d <= 0 or self.partial_volume <= 0:
            raise ConfigError("separation_d and partial_volume must be positive", stage="mbll")
        if self.ref_samples < 1:
            raise ConfigError("ref_samples must be >= 1", stage="mbll")
        eps.setflags(write=False)
        object.__setattr__(self, "epsilon", eps)
        missing = {"a", "b", "g", "d", "e", "f"} - set(self.dpf_coeffs)
        if missing:
            raise ConfigError(f"dpf_coeffs missing {sorted(missing)}", stage="mbll")


def dpf(wavelength: float, age: float, params: MbllParams | None = None) -> float:
    """Age- and wavelength-adjusted differential pathlength factor."""
    params = params or MbllParams()
    lo, hi = OPTICS["dpf_valid_nm"]
    if not lo <= wavelength <= hi:
        raise DataError(f"wavelength {wavelength} nm outside [{lo}, {hi}]", stage="mbll")
    if not age > 0:
        raise DataError(f"age must be positive, got {age}", stage="mbll")
    c = params.dpf_coeffs
    lam = float(wavelength)
    value = c["a"] + c["b"] * age ** c["g"] + c["d"] * lam**3 + c["e"] * lam**2 + c["f"] * lam
    if value <= 0:
        raise DataError(f"DPF evaluated non-positive ({value}) at {wavelength} nm, age {age}", stage="mbll")
    return value


def _pathlengths(age: float, params: MbllParams) -> np.ndarray:
    """Effective photon path per wavelength, cm."""
    return np.array([params.separation_d * params.partial_volume * dpf(w, age, params) for w in WAVELENGTHS_NM])


def forward_mbll(hbo2, hb, age: float, params: MbllParams | None = None, i0=(1.0, 1.0)):
    """Intensities at 730/850 nm produced by the given concentration changes.

    ``i0`` is the reference intensity per wavelength (scalar or per-channel array).
    """
    params = params or MbllParams()
    hbo2 = np.asarray(hbo2, dtype=float)
    hb = np.asarray(hb, dtype=float)
    if hbo2.shape != hb.shape:
        raise DataError("hbo2 and hb shapes differ", stage="forward_mbll")
    if not (np.all(np.isfinite(hbo2)) and np.all(np.isfinite(hb))):
        raise DataError("non-finite concentration", stage="forward_mbll")
    paths = _pathlengths(age, params)
    out = []
    for k in range(2):
        eps_o, eps_r = params.epsilon[k]
        od = (eps_o * hbo2 + eps_r * hb) / UM_PER_MM * paths[k]
        ref = np.asarray(i0[k], dtype=float)
        if ref.ndim == 1 and hbo2.ndim == 2:
            ref = ref[:, None]
        out.append(ref * 10.0 ** (-od))
    return out[0], out[1]


def mbll_convert(i730, i850, age: float, params: MbllParams | None = None):
    """Intensities -> (Δ[HbO2], Δ[Hb]) in µM.

    ΔOD is taken against the mean of the first ``ref_samples`` samples and the
    2x2 system is solved at every time point (and channel, for 2-D input).
    """
    params = params or MbllParams()
    i730 = np.asarray(i730, dtype=float)
    i850 = np.asarray(i850, dtype=float)
    if i730.shape != i850.shape:
        raise DataError("intensity series lengths differ", stage="mbll")
    if i730.shape[-1] < params.ref_samples:
        raise DataError(f"need at least {params.ref_samples} samples for the reference", stage="mbll")
    if not (np.all(i730 > 0) and np.all(i850 > 0)):
        raise DataError("intensities must be strictly positive", stage="mbll")
    n_ref = params.ref_samples
    od = np.stack(
        [-np.log10(i / np.mean(i[..., :n_ref], axis=-1, keepdims=True)) for i in (i730, i850)]
    )
    paths = _pathlengths(age, params)
    # ΔOD_k = path_k * (eps_k,HbO2 c_HbO2 + eps_k,Hb c_Hb)
    system = params.epsilon * paths[:, None]
    try:
        inv = np.linalg.inv(system)
    except np.linalg.LinAlgError:
        raise DataError("singular extinction system", stage="mbll") from None
    conc = np.tensordot(inv, od, axes=(1, 0)) * UM_PER_MM
    return conc[0], conc[1]
