"""
Synthetic fire scenario: EVI-like pixel stacks with a regime shift.

Burned pixels follow an irregular quasi-periodic regime, collapse at the
fire, recover along a ramp and then settle into a slower, more regular
seasonal regime. Unburned pixels keep the pre-fire regime throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .signal import PixelStack, SplitSpec, TimeSeries

SAMPLES_PER_YEAR = 23


@dataclass(frozen=True)
class FireScenario:
    n: int = 323
    pixels: int = 20
    fire_index: int = 150
    post_start: int = 173
    seed: int = 2007
    noise_sd: float = 0.02
    post_period: float = 1.5 * SAMPLES_PER_YEAR

    @property
    def split(self) -> SplitSpec:
        return SplitSpec(self.fire_index - 1, self.post_start)


# level, seasonal amplitude per cover type
_COVER = {"forest": (0.42, 0.10), "grassland": (0.30, 0.12)}


def _pre_regime(t, level, amp, rng, noise_sd):
    phase = rng.uniform(-0.3, 0.3)
    second = 0.6 * amp * np.sin(2 * np.pi * t / (SAMPLES_PER_YEAR * 0.381966) + rng.uniform(0, 2 * np.pi))
    return (
        level
        + amp * np.sin(2 * np.pi * t / SAMPLES_PER_YEAR + phase)
        + second
        + rng.normal(0.0, 2.0 * noise_sd, t.size)
    )


def _pixel(cfg: FireScenario, cover: str, burned: bool, rng) -> np.ndarray:
    level, amp = _COVER[cover]
    t = np.arange(cfg.n, dtype=float)
    u = _pre_regime(t, level, amp, rng, cfg.noise_sd)
    if not burned:
        return u
    f, p = cfg.fire_index, cfg.post_start
    trough = 0.05 + rng.uniform(0.0, 0.01)
    u[f:p] = np.linspace(trough, level - 0.5 * amp, p - f)
    tp = t[p:] - p
    u[p:] = (
        level
        + amp * np.sin(2 * np.pi * tp / cfg.post_period - np.pi / 2 + rng.uniform(-0.1, 0.1))
        + rng.normal(0.0, 0.5 * cfg.noise_sd, tp.size)
    )
    return u


def fire_scenario(cfg: FireScenario = FireScenario()) -> Dict[str, PixelStack]:
    """Four stacks: burned/unburned x forest/grassland, ``cfg.pixels`` each."""
    stacks = {}
    for k, (status, cover) in enumerate(
        [("burned", "forest"), ("burned", "grassland"), ("unburned", "forest"), ("unburned", "grassland")]
    ):
        label = f"{status}_{cover}"
        series = {}
        for i in range(cfg.pixels):
            rng = np.random.default_rng([cfg.seed, k, i])
            series[f"{label}_{i:03d}"] = TimeSeries(_pixel(cfg, cover, status == "burned", rng))
        stacks[label] = PixelStack(series, label)
    return stacks
