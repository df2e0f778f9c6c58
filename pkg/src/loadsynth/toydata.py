"""Parametric ground-truth load simulator.

Produces multi-year "real" bus load with known structure, standing in for
an actual measurement archive at desk scale.  The signal is

    load(t) = base_mw * yearly(t) * daily(t) * (1 + n(t))

where yearly and daily are truncated Fourier series (2 harmonics of 1/year,
3 harmonics of 1/day) and n(t) is AR(1) noise at the 30 Hz measurement
rate, clipped to (-0.9, 0.9) so the output stays strictly positive.

Residential and industrial parameter sets reproduce the qualitative class
contrast seen in practice: residential loads have pronounced summer and
winter peaks and a smooth daily curve; industrial loads are nearly flat
across the year but irregular within the day.

Materializing years of 30 Hz data is infeasible (~1e9 samples per load per
year), so two sampling paths are provided:

* :func:`simulate_ground_truth` materializes the full 30 Hz signal, for
  windows up to hours;
* :func:`simulate_block_means` returns block averages over any span.  The
  deterministic part is averaged in closed form over each block's 30 Hz
  sample grid (the product of the two Fourier series is a finite cosine
  sum, and the discrete average of a cosine has a Dirichlet-kernel closed
  form); the block means of the AR(1) noise are drawn exactly from their
  closed-form joint Gaussian distribution, block by block, carrying the
  end state.  Within a block the noise is weighted by the deterministic
  value at the block centre (the deterministic factor moves by <0.5% over
  30 s, so the error is far below the noise scale).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.signal import lfilter

from .core import LoadClass

DAY_S = 86_400.0
YEAR_S = 52 * 604_800.0

# Fixed shape constants: evening peak at 18:00, arbitrary but frozen phases
# for the higher daily harmonics (they shape the industrial multi-peak day).
_DAILY_PEAK_S = 18 * 3600.0
_RIPPLE_PHASE_2 = 0.9
_RIPPLE_PHASE_3 = 2.1

_NOISE_CLIP = 0.9


@dataclass(frozen=True)
class ToyLoadConfig:
    """Parameters of one simulated load; immutable and fully deterministic."""

    load_class: LoadClass
    base_mw: float
    seasonal_amp: float  # twice-yearly harmonic: summer + winter bumps
    seasonal_tilt: float  # once-yearly harmonic: winter-vs-summer asymmetry
    daily_amp: float  # fundamental daily swing
    daily_ripple: float  # 2nd+3rd daily harmonics (irregularity)
    ar_coeff: float  # AR(1) coefficient of the 30 Hz noise
    noise_rel_std: float  # stationary relative std of the fast noise
    seed: int

    def __post_init__(self):
        if self.base_mw <= 0:
            raise ValueError("base_mw must be positive")
        if not 0.0 <= self.ar_coeff < 1.0:
            raise ValueError("ar_coeff must be in [0, 1)")
        if not 0.0 <= self.noise_rel_std <= 0.2:
            raise ValueError("noise_rel_std must be in [0, 0.2]")

    @classmethod
    def residential(cls, seed: int, base_mw: float = 50.0) -> "ToyLoadConfig":
        return cls(
            load_class=LoadClass.MAINLY_RESIDENTIAL,
            base_mw=base_mw,
            seasonal_amp=0.15,
            seasonal_tilt=0.05,
            daily_amp=0.30,
            daily_ripple=0.03,
            ar_coeff=0.6,
            noise_rel_std=0.05,
            seed=seed,
        )

    @classmethod
    def industrial(cls, seed: int, base_mw: float = 80.0) -> "ToyLoadConfig":
        return cls(
            load_class=LoadClass.MAINLY_INDUSTRIAL,
            base_mw=base_mw,
            seasonal_amp=0.01,
            seasonal_tilt=0.005,
            daily_amp=0.08,
            daily_ripple=0.12,
            ar_coeff=0.6,
            noise_rel_std=0.08,
            seed=seed,
        )

    def yearly(self, t):
        """Seasonal modulation at time t (seconds from Jan 1); mean ~1."""
        t = np.asarray(t, dtype=np.float64)
        w = 2.0 * np.pi / YEAR_S
        return 1.0 + self.seasonal_tilt * np.cos(w * t) + self.seasonal_amp * np.cos(2 * w * t)

    def daily(self, t):
        """Within-day modulation at time t; mean 1 over any whole day."""
        t = np.asarray(t, dtype=np.float64)
        w = 2.0 * np.pi / DAY_S
        return (
            1.0
            + self.daily_amp * np.cos(w * (t - _DAILY_PEAK_S))
            + self.daily_ripple * np.cos(2 * w * t + _RIPPLE_PHASE_2)
            + self.daily_ripple * np.cos(3 * w * t + _RIPPLE_PHASE_3)
        )

    def deterministic(self, t):
        return self.yearly(t) * self.daily(t)

    def to_json(self) -> str:
        d = asdict(self)
        d["load_class"] = self.load_class.value
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ToyLoadConfig":
        d = json.loads(text)
        d["load_class"] = LoadClass(d["load_class"])
        return cls(**d)


def _rng_for(config: ToyLoadConfig, stream: int, offset_samples: int) -> np.random.Generator:
    # Documented seed split: independent streams keyed by (seed, stream tag,
    # start offset in 30 Hz samples).  Stream 0 = full rate, 1 = block means.
    return np.random.default_rng((config.seed, stream, offset_samples))


def split_load_seed(seed: int, load_index: int) -> int:
    """Derive the per-load seed for load ``load_index`` from a master seed."""
    ss = np.random.SeedSequence(entropy=(seed, load_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _cosine_terms(config: ToyLoadConfig) -> list[tuple[float, float, float]]:
    """yearly(t)*daily(t) expanded as a finite list of (amp, omega, phase)."""
    wy = 2.0 * np.pi / YEAR_S
    wd = 2.0 * np.pi / DAY_S
    yearly = [
        (config.seasonal_tilt, wy, 0.0),
        (config.seasonal_amp, 2 * wy, 0.0),
    ]
    daily = [
        (config.daily_amp, wd, -wd * _DAILY_PEAK_S),
        (config.daily_ripple, 2 * wd, _RIPPLE_PHASE_2),
        (config.daily_ripple, 3 * wd, _RIPPLE_PHASE_3),
    ]
    terms = [(1.0, 0.0, 0.0)]
    terms += yearly
    terms += daily
    for ay, oy, py in yearly:
        for ad, od, pd in daily:
            # cos(a)cos(b) = (cos(a-b) + cos(a+b)) / 2
            terms.append((0.5 * ay * ad, oy - od, py - pd))
            terms.append((0.5 * ay * ad, oy + od, py + pd))
    return terms


def _block_means_of_terms(terms, starts: np.ndarray, m: int, h: float) -> np.ndarray:
    """Exact mean of a cosine sum over m samples spaced h from each start.

    Uses the closed form (1/m) sum_k cos(t0*w + p + k*w*h)
    = cos(t0*w + p + (m-1)*w*h/2) * sin(m*w*h/2) / (m*sin(w*h/2)),
    which matches the discrete sample average of the 30 Hz path to float
    precision, not just to quadrature order.
    """
    out = np.zeros(starts.size)
    for amp, omega, phase in terms:
        if omega == 0.0:
            out += amp * math.cos(phase)
        else:
            half = 0.5 * omega * h
            gain = math.sin(m * half) / (m * math.sin(half))
            out += amp * gain * np.cos(omega * starts + phase + half * (m - 1))
    return out


def _ar1_block_moments(rho: float, sigma_e: float, m: int):
    """Closed-form moments of one AR(1) block of length m.

    For the block sum S and end state E given start state n0:
        S = A*n0 + zeta,   E = rho^m * n0 + eta,
    with (zeta, eta) zero-mean jointly Gaussian.  Returns
    (A, rho^m, var_eta, var_zeta, cov_zeta_eta).
    """
    if m < 1:
        raise ValueError("block length must be >= 1")
    one = 1.0 - rho
    rho_m = rho**m
    rho_2m = rho ** (2 * m)
    if rho == 0.0:
        A = 0.0
    else:
        A = rho * (1.0 - rho_m) / one
    var_eta = sigma_e**2 * (1.0 - rho_2m) / (1.0 - rho**2)
    q = m - 2.0 * rho * (1.0 - rho_m) / one + rho**2 * (1.0 - rho_2m) / (1.0 - rho**2)
    var_zeta = sigma_e**2 * q / one**2
    cov = (sigma_e**2 / one) * (
        (1.0 - rho_m) / one - rho * (1.0 - rho_2m) / (1.0 - rho**2)
    )
    return A, rho_m, var_eta, var_zeta, cov


def _ar1_path(rho: float, sigma_e: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n samples of stationary AR(1) noise, clipped to +-0.9."""
    if sigma_e == 0.0:
        return np.zeros(n)
    sigma = sigma_e / math.sqrt(1.0 - rho**2)
    n0 = sigma * rng.standard_normal()
    innov = sigma_e * rng.standard_normal(n)
    out, _ = lfilter([1.0], [1.0, -rho], innov, zi=np.array([rho * n0]))
    return np.clip(out, -_NOISE_CLIP, _NOISE_CLIP)


def simulate_ground_truth(
    config: ToyLoadConfig, duration_s: float, start_time_s: float = 0.0
) -> np.ndarray:
    """Materialize the load at the full 30 Hz rate.

    Deterministic in (config, start_time_s).  The start time selects an
    independent noise stream, so disjoint windows are independent draws.
    """
    if duration_s < 30.0:
        raise ValueError("duration_s must be at least 30 s")
    n = int(round(duration_s * 30.0))
    t = start_time_s + np.arange(n) / 30.0
    det = config.base_mw * config.deterministic(t)
    sigma_e = config.noise_rel_std * math.sqrt(1.0 - config.ar_coeff**2)
    rng = _rng_for(config, 0, int(round(start_time_s * 30.0)))
    noise = _ar1_path(config.ar_coeff, sigma_e, n, rng)
    return det * (1.0 + noise)


def simulate_block_means(
    config: ToyLoadConfig, block_s: float, n_blocks: int, start_time_s: float = 0.0
) -> np.ndarray:
    """Block averages of the simulated load without materializing 30 Hz data.

    ``block_s`` must be a whole number of 30 Hz samples.  One value per
    block; deterministic in (config, start_time_s, block_s).
    """
    m = block_s * 30.0
    if abs(m - round(m)) > 1e-9 or m < 1:
        raise ValueError("block_s must be a positive multiple of 1/30 s")
    m = int(round(m))
    starts = start_time_s + block_s * np.arange(n_blocks)
    det_mean = _block_means_of_terms(_cosine_terms(config), starts, m, 1.0 / 30.0)

    sigma_e = config.noise_rel_std * math.sqrt(1.0 - config.ar_coeff**2)
    if sigma_e == 0.0:
        return config.base_mw * det_mean

    rho = config.ar_coeff
    A, rho_m, var_eta, var_zeta, cov = _ar1_block_moments(rho, sigma_e, m)
    rng = _rng_for(config, 1, int(round(start_time_s * 30.0)))
    sigma = config.noise_rel_std
    n_init = sigma * rng.standard_normal()
    z_eta = rng.standard_normal(n_blocks)
    z_extra = rng.standard_normal(n_blocks)
    eta = math.sqrt(var_eta) * z_eta
    # zeta | eta: regression on eta plus independent residual
    slope = cov / var_eta
    resid_var = max(var_zeta - cov**2 / var_eta, 0.0)
    zeta = slope * eta + math.sqrt(resid_var) * z_extra
    # end states follow an AR(1) recursion with coefficient rho^m
    end, _ = lfilter([1.0], [1.0, -rho_m], eta, zi=np.array([rho_m * n_init]))
    start_states = np.concatenate(([n_init], end[:-1]))
    noise_mean = np.clip((A * start_states + zeta) / m, -_NOISE_CLIP, _NOISE_CLIP)

    det_center = config.deterministic(starts + 0.5 * block_s)
    return config.base_mw * (det_mean + det_center * noise_mean)


def desk_level_datasets(
    configs: list[ToyLoadConfig],
    n_years: int = 2,
    l1_windows_per_load: int = 200,
    l2_profiles_per_load: int = 250,
):
    """Training datasets for a fleet of simulated loads, at desk scale.

    Levels 2-4 come from the block-mean path over the full span; level 1
    windows are the only places the 30 Hz signal is materialized, spread
    evenly across the span (aligned to the 30-second grid so each window
    gets its own deterministic noise stream).
    """
    from . import ingest  # local import: ingest never imports toydata

    merged = ingest.LevelDatasets()
    span_s = n_years * YEAR_S
    for cfg in configs:
        n_blocks = int(round(span_s / 30.0))
        m30 = simulate_block_means(cfg, 30.0, n_blocks)
        part = ingest.extract_levels_from_block_means(
            m30, cfg.load_class, 0.0, max_l2_profiles=l2_profiles_per_load
        )
        for j in range(l1_windows_per_load):
            t0 = 30.0 * math.floor(j * span_s / l1_windows_per_load / 30.0)
            window = simulate_ground_truth(cfg, 30.0, start_time_s=t0)
            part.l1.append(ingest.mean_one_profile(window, 1.0 / 30.0, cfg.load_class))
        merged.extend(part)
    return merged


def default_desk_configs(
    n_residential: int = 6, n_industrial: int = 6, seed: int = 2024
) -> list[ToyLoadConfig]:
    """The default desk-scale fleet: 12 loads of varied size, half per class."""
    rng = np.random.default_rng((seed, 0xD5))
    configs = []
    for i in range(n_residential):
        base = float(rng.uniform(20.0, 90.0))
        configs.append(ToyLoadConfig.residential(seed=split_load_seed(seed, i), base_mw=base))
    for i in range(n_industrial):
        base = float(rng.uniform(40.0, 150.0))
        configs.append(
            ToyLoadConfig.industrial(
                seed=split_load_seed(seed, n_residential + i), base_mw=base
            )
        )
    return configs
