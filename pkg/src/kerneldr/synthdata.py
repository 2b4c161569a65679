"""Seeded generators for the three nonlinear simulation datasets.

wine_chocolate
    3-D; class 0 on a sphere of radius 1, class 1 on a sphere of radius 3.
apple_tart
    2-D; four concentric annuli.
swiss_roll
    3-D; ``(t cos t, h, t sin t)`` with classes given by four equal-width
    bands of ``t``.

Every generator draws from ``numpy.random.Philox`` keyed by the seed, so the
output is a pure function of the SynthSpec.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

RNG_NAME = "numpy.Philox"

WINE_CHOCOLATE = {"radii": (1.0, 3.0), "noise_sd": 0.1}
APPLE_TART = {"bands": ((0.0, 1.0), (1.5, 2.5), (3.0, 4.0), (4.5, 5.5)), "noise_sd": 0.1}
SWISS_ROLL = {"t_range": (1.5 * np.pi, 4.5 * np.pi), "height": (0.0, 10.0), "n_bands": 4, "noise_sd": 0.1}

DATASETS = ("wine_chocolate", "apple_tart", "swiss_roll")
_DEFAULT_NOISE = {
    "wine_chocolate": WINE_CHOCOLATE["noise_sd"],
    "apple_tart": APPLE_TART["noise_sd"],
    "swiss_roll": SWISS_ROLL["noise_sd"],
}


@dataclass(frozen=True)
class SynthSpec:
    dataset: str
    n_per_class: int = 300
    noise_sd: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}; expected one of {DATASETS}")
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be positive")
        if self.noise_sd is not None and self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")

    @property
    def noise(self):
        return _DEFAULT_NOISE[self.dataset] if self.noise_sd is None else float(self.noise_sd)

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "n_per_class": int(self.n_per_class),
            "noise_sd": self.noise,
            "seed": int(self.seed),
            "rng": RNG_NAME,
        }


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def _sphere(rng, n, radius):
    v = rng.standard_normal((n, 3))
    return radius * v / np.linalg.norm(v, axis=1, keepdims=True)


def _wine_chocolate(rng, m, noise):
    r0, r1 = WINE_CHOCOLATE["radii"]
    X = np.vstack([_sphere(rng, m, r0), _sphere(rng, m, r1)])
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    return X, np.repeat([0, 1], m)


def _apple_tart(rng, m, noise):
    parts = []
    for lo, hi in APPLE_TART["bands"]:
        r = rng.uniform(lo, hi, m)
        if noise > 0:
            r = r + noise * rng.standard_normal(m)
        theta = rng.uniform(0.0, 2 * np.pi, m)
        parts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    k = len(APPLE_TART["bands"])
    return np.vstack(parts), np.repeat(np.arange(k), m)


def _swiss_roll(rng, m, noise):
    t0, t1 = SWISS_ROLL["t_range"]
    h0, h1 = SWISS_ROLL["height"]
    k = SWISS_ROLL["n_bands"]
    edges = np.linspace(t0, t1, k + 1)
    parts = []
    for c in range(k):
        t = rng.uniform(edges[c], edges[c + 1], m)
        h = rng.uniform(h0, h1, m)
        parts.append(np.column_stack([t * np.cos(t), h, t * np.sin(t)]))
    X = np.vstack(parts)
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    return X, np.repeat(np.arange(k), m)


_GENERATORS = {
    "wine_chocolate": _wine_chocolate,
    "apple_tart": _apple_tart,
    "swiss_roll": _swiss_roll,
}


def generate(spec):
    """Build the dataset described by ``spec``; rows are grouped by class."""
    rng = make_rng(spec.seed)
    X, y = _GENERATORS[spec.dataset](rng, spec.n_per_class, spec.noise)
    names = [f"f{j}" for j in range(X.shape[1])]
    return Dataset(X, y, feature_names=names)
