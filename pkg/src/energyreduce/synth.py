"""Seeded synthetic telemetry with controlled correlation to power.

Four latent series live on a minute grid: temperature and light carry a
daily cycle plus slow drift, humidity and the power residual are drift only.
The latents are orthonormalized over the grid, so power built as

    power = rho_temp*z_temp + rho_light*z_light + rho_hum*z_hum + sqrt(1 - sum rho^2)*z_res

has exactly the requested minute-level correlations before measurement
noise. Sensors then sample the latents at irregular instants; each reading
reports the latent of the minute it rounds to, plus independent noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InfeasibleCorrelation
from .ingest import MINUTE_MS, VARIABLES, TelemetryRecord, parse_timestamp, round_to_minute
from .seeding import derive_rng

# physical (offset, scale) per variable
UNITS = {
    "temperature": (24.0, 2.0),
    "humidity": (50.0, 8.0),
    "light": (300.0, 120.0),
    "power": (150.0, 40.0),
}
# per-reading measurement noise, in latent standard deviations, before the
# global ``noise`` multiplier; the light sensor is by far the least precise
NOISE_PROFILE = {
    "temperature": 0.2,
    "humidity": 0.5,
    "light": 1.2,
    "power": 0.3,
}
ENV_DEVICE = "env-01"
POWER_DEVICE = "plug-01"
DAY_MINUTES = 1440


@dataclass(frozen=True)
class SynthConfig:
    duration: int = 50_000  # minutes
    start: str = "2020-06-01T00:00:00Z"
    env_period: float = 15.0  # seconds
    env_jitter: float = 0.2
    power_cadence: float = 30.0  # mean seconds between plug reports
    power_jitter: float = 0.8
    rho_temp: float = 0.7
    rho_light: float = 0.35
    rho_hum: float = 0.0
    noise: float = 1.0  # multiplier on NOISE_PROFILE
    missing_rate: float = 0.02
    persistence: float = 0.995  # per-minute AR(1) coefficient of the drift
    diurnal: float = 1.0  # daily-cycle amplitude relative to drift
    seed: int = 0

    def __post_init__(self) -> None:
        if self.duration < 1:
            raise ValueError("duration must be at least 1 minute")
        for name in ("rho_temp", "rho_light", "rho_hum"):
            if abs(getattr(self, name)) > 1:
                raise ValueError(f"{name} must lie in [-1, 1]")
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValueError("missing_rate must lie in [0, 1]")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if self.env_period <= 0 or self.power_cadence <= 0:
            raise ValueError("sampling periods must be positive")
        if not (0.0 <= self.env_jitter < 1.0 and 0.0 <= self.power_jitter < 1.0):
            raise ValueError("jitter must lie in [0, 1)")
        if not 0.0 <= self.persistence < 1.0:
            raise ValueError("persistence must lie in [0, 1)")
        budget = self.rho_temp**2 + self.rho_light**2 + self.rho_hum**2
        if budget > 1.0 + 1e-12:
            raise InfeasibleCorrelation(
                f"rho_temp^2 + rho_light^2 + rho_hum^2 = {budget:.4f} exceeds 1"
            )


@dataclass
class Synthesis:
    records: list[TelemetryRecord]
    start_ms: int
    minutes: int
    withheld: dict[int, str] = field(default_factory=dict)  # minute ms -> variable
    latents: dict[str, np.ndarray] = field(default_factory=dict)  # physical units per minute


def _orthonormal_latents(cfg: SynthConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    n = cfg.duration
    m = np.arange(n, dtype=np.float64)
    phi = cfg.persistence
    drift_scale = math.sqrt(1.0 - phi * phi)

    def drift():
        return lfilter([drift_scale], [1.0, -phi], rng.standard_normal(n))

    day = 2.0 * math.pi * m / DAY_MINUTES
    raw = [
        cfg.diurnal * math.sqrt(2.0) * np.sin(day - 2.0) + drift(),  # temperature, peaks mid-afternoon
        cfg.diurnal * math.sqrt(2.0) * np.sin(day - 1.6) + drift(),  # light, peaks near noon
        drift(),  # humidity
        drift(),  # power residual
    ]
    basis: list[np.ndarray] = []
    for v in raw:
        v = v - v.mean()
        for b in basis:
            v = v - (v @ b) * b
        norm = math.sqrt(float(v @ v))
        # degenerate only for 1-2 minute grids; fall back to a zero series
        basis.append(v / norm if norm > 1e-12 else np.zeros(n))
    # unit population variance
    scale = math.sqrt(n)
    z_temp, z_light, z_hum, z_res = (b * scale for b in basis)
    resid = math.sqrt(max(0.0, 1.0 - cfg.rho_temp**2 - cfg.rho_light**2 - cfg.rho_hum**2))
    z_power = cfg.rho_temp * z_temp + cfg.rho_light * z_light + cfg.rho_hum * z_hum + resid * z_res
    return {"temperature": z_temp, "humidity": z_hum, "light": z_light, "power": z_power}


def _arrivals(first_ms: int, end_ms: int, period_s: float, jitter: float,
              rng: np.random.Generator) -> np.ndarray:
    count = int((end_ms - first_ms) / (period_s * 1000 * (1 - jitter))) + 2
    gaps = period_s * 1000.0 * (1.0 + rng.uniform(-jitter, jitter, size=count))
    t = first_ms + np.concatenate([[0.0], np.cumsum(gaps)])
    t = np.floor(t).astype(np.int64)
    return t[t < end_ms]


def generate_detailed(cfg: SynthConfig) -> Synthesis:
    start = round_to_minute(parse_timestamp(cfg.start))
    n = cfg.duration
    z = _orthonormal_latents(cfg, derive_rng(cfg.seed, 0))
    first = start - MINUTE_MS // 2
    end = start + n * MINUTE_MS - MINUTE_MS // 2

    # withheld (minute, variable) cells
    miss_rng = derive_rng(cfg.seed, 1)
    withheld_idx = np.flatnonzero(miss_rng.random(n) < cfg.missing_rate)
    withheld_var = miss_rng.integers(0, len(VARIABLES), size=len(withheld_idx))
    blocked = np.zeros((n, len(VARIABLES)), dtype=bool)
    blocked[withheld_idx, withheld_var] = True

    env_t = _arrivals(first, end, cfg.env_period, cfg.env_jitter, derive_rng(cfg.seed, 2))
    pow_t = _arrivals(first, end, cfg.power_cadence, cfg.power_jitter, derive_rng(cfg.seed, 3))
    noise_rng = derive_rng(cfg.seed, 4)

    stamps, sources, keys, values = [], [], [], []
    for device, times, variables in (
        (ENV_DEVICE, env_t, ("temperature", "humidity", "light")),
        (POWER_DEVICE, pow_t, ("power",)),
    ):
        minute_idx = (times + MINUTE_MS // 2) // MINUTE_MS - (start // MINUTE_MS)
        for var in variables:
            vi = VARIABLES.index(var)
            lo, sc = UNITS[var]
            noisy = z[var][minute_idx] + cfg.noise * NOISE_PROFILE[var] * noise_rng.standard_normal(len(times))
            keep = ~blocked[minute_idx, vi]
            stamps.append(times[keep])
            keys.append(np.full(int(keep.sum()), vi))
            values.append(lo + sc * noisy[keep])
            sources.append(np.full(int(keep.sum()), 0 if device == ENV_DEVICE else 1))

    ts = np.concatenate(stamps)
    key = np.concatenate(keys)
    val = np.concatenate(values)
    src = np.concatenate(sources)
    order = np.lexsort((key, ts))
    device_names = (ENV_DEVICE, POWER_DEVICE)
    records = [
        TelemetryRecord(t, device_names[s], VARIABLES[k], v)
        for t, s, k, v in zip(ts[order].tolist(), src[order].tolist(), key[order].tolist(), val[order].tolist())
    ]
    withheld = {start + int(i) * MINUTE_MS: VARIABLES[int(v)] for i, v in zip(withheld_idx, withheld_var)}
    latents = {v: UNITS[v][0] + UNITS[v][1] * z[v] for v in VARIABLES}
    return Synthesis(records, start, n, withheld, latents)


def generate(cfg: SynthConfig) -> list[TelemetryRecord]:
    """Synthetic telemetry records in timestamp order.

    Every minute receives at least one reading per variable as long as the
    longest sampling gap stays under a minute (the defaults do), so the only
    incomplete minutes are the deliberately withheld ones.
    """
    return generate_detailed(cfg).records
