"""Seeded synthetic prediction dumps with controllable accuracy and calibration.

Generation recipe, per sample ``s`` (all randomness from one stream):

1. Six uniforms ``u0..u5`` in (0, 1) are taken from the stream. The stream is
   numpy's PCG64 bit generator seeded with ``SeedSequence(seed)``; each raw
   64-bit word ``w`` becomes ``((w >> 11) + 0.5) * 2**-53``. Sample ``s``
   consumes words ``6s .. 6s+5``.
2. A shape ``x`` in (0, 1) is drawn by inverse CDF from a Kumaraswamy(a, b)
   distribution (a Beta-shaped law with closed-form quantiles), with
   ``a = BASE_SHAPE`` and ``b`` solved so that the base confidence
   ``p = 1/k + (1 - 1/k) * x`` has mean ``target_accuracy``.
3. The sample is correct when ``u1 < p``. Its label is ``floor(u2 * k)``;
   a wrong prediction points at ``(label + 1 + floor(u3 * (k - 1))) mod k``.
4. The emitted vector puts ``p`` on the predicted class and spreads ``1 - p``
   uniformly over the rest, then applies temperature: every entry is raised
   to ``1/T`` and the vector renormalized. ``T = 1`` is calibrated, ``T < 1``
   over-confident, ``T > 1`` under-confident.
5. For ``T != 1`` the log-odds of ``x`` are first jittered by Gaussian noise
   (Box-Muller on ``u4, u5``) with standard deviation
   ``RANK_NOISE_PER_LOG_TEMPERATURE * |ln T|``. A miscalibrated model thus
   also orders its samples less reliably, which is what lets a more accurate
   but over-confident model earn a lower Trust Index. At ``T = 1`` the noise
   vanishes and confidence equals ``p`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .ingest import PredictionSet

BASE_SHAPE = 3.0
RANK_NOISE_PER_LOG_TEMPERATURE = 1.0
DRAWS_PER_SAMPLE = 6
_CHUNK = 65536
_TINY = 2.0**-53
# keeps the predicted class strictly above the residual entries after rounding
_X_FLOOR = 1e-6


@dataclass(frozen=True)
class SynthConfig:
    n: int
    k: int
    target_accuracy: float
    temperature: float = 1.0
    seed: int = 0

    def validate(self) -> "SynthConfig":
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 2:
            raise ConfigError(f"k must be an integer >= 2, got {self.k}")
        acc = float(self.target_accuracy)
        if not (0.0 < acc <= 1.0):
            raise ConfigError(f"target_accuracy must lie in (0, 1], got {self.target_accuracy}")
        if acc <= 1.0 / self.k:
            raise ConfigError(
                f"target_accuracy must exceed chance level 1/k = {1.0 / self.k:.4g}, got {self.target_accuracy}"
            )
        t = float(self.temperature)
        if not (math.isfinite(t) and t > 0.0):
            raise ConfigError(f"temperature must be a positive finite number, got {self.temperature}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed}")
        return self


def _kumaraswamy_mean(a: float, b: float) -> float:
    return math.exp(math.log(b) + math.lgamma(1.0 + 1.0 / a) + math.lgamma(b) - math.lgamma(1.0 + 1.0 / a + b))


def kumaraswamy_b_for_mean(a: float, mean: float) -> float:
    """Solve ``E[X] = mean`` for the second Kumaraswamy parameter (bisection in log space)."""
    if not 0.0 < mean < 1.0:
        raise ConfigError(f"mean must lie in (0, 1), got {mean}")
    lo, hi = 1e-8, 1e8
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        # the mean decreases in b
        if _kumaraswamy_mean(a, mid) > mean:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def _uniforms(bitgen: np.random.PCG64, count: int) -> np.ndarray:
    raw = bitgen.random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _chunk(u: np.ndarray, cfg: SynthConfig, b: float | None) -> tuple[np.ndarray, np.ndarray]:
    k = cfg.k
    t = float(cfg.temperature)
    m = u.shape[0]
    if b is None:
        x = np.ones(m)
    else:
        x = (1.0 - (1.0 - u[:, 0]) ** (1.0 / b)) ** (1.0 / BASE_SHAPE)
        np.maximum(x, _X_FLOOR, out=x)
    p = 1.0 / k + (1.0 - 1.0 / k) * x
    correct = u[:, 1] < p
    labels = np.minimum((u[:, 2] * k).astype(np.int64), k - 1)
    offset = np.minimum((u[:, 3] * (k - 1)).astype(np.int64), k - 2)
    predicted = np.where(correct, labels, (labels + 1 + offset) % k)

    if t != 1.0 and b is not None:
        sigma = RANK_NOISE_PER_LOG_TEMPERATURE * abs(math.log(t))
        z = np.sqrt(-2.0 * np.log(u[:, 4])) * np.cos(2.0 * np.pi * u[:, 5])
        xc = np.minimum(x, 1.0 - _TINY)
        logit = np.log(xc) - np.log1p(-xc) + sigma * z
        x = np.clip(1.0 / (1.0 + np.exp(-logit)), _X_FLOOR, 1.0 - _TINY)
        p = 1.0 / k + (1.0 - 1.0 / k) * x

    rest = (1.0 - p) / (k - 1)
    if t != 1.0:
        # tempered in log space so that p**(1/T) cannot underflow relative to rest
        with np.errstate(divide="ignore"):
            lp = np.log(p) / t
            lr = np.log(rest) / t
        top = 1.0 / (1.0 + (k - 1) * np.exp(lr - lp))
        rest = (1.0 - top) / (k - 1)
        p = top

    probs = np.repeat(rest[:, None], k, axis=1)
    probs[np.arange(m), predicted] = p
    return probs, labels


def generate_synthetic(cfg: SynthConfig) -> PredictionSet:
    """Generate ``cfg.n`` records; identical configs give identical sets."""
    cfg.validate()
    k = cfg.k
    mean_x = (cfg.target_accuracy - 1.0 / k) / (1.0 - 1.0 / k)
    b = None if mean_x >= 1.0 else kumaraswamy_b_for_mean(BASE_SHAPE, mean_x)

    bitgen = np.random.PCG64(int(cfg.seed))
    probs = np.empty((cfg.n, k), dtype=np.float64)
    labels = np.empty(cfg.n, dtype=np.int64)
    for start in range(0, cfg.n, _CHUNK):
        stop = min(start + _CHUNK, cfg.n)
        u = _uniforms(bitgen, (stop - start) * DRAWS_PER_SAMPLE).reshape(stop - start, DRAWS_PER_SAMPLE)
        probs[start:stop], labels[start:stop] = _chunk(u, cfg, b)
    probs.setflags(write=False)
    labels.setflags(write=False)
    return PredictionSet(probs, labels, None, "synthetic")
