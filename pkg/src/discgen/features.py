"""Mapping between discontinuity tables and the z-scored space the networks see."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_data import DiscontinuitySet, normalize_dip_direction


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-scoring of ``(dip_direction, dip_angle, log(trace_length))``.

    A constant column keeps a unit scale so it maps to zero instead of NaN.
    """

    mean: tuple
    std: tuple

    @classmethod
    def fit(cls, dset: DiscontinuitySet) -> "Standardizer":
        f = dset.features()
        sd = f.std(axis=0)
        sd = np.where(sd > 0.0, sd, 1.0)
        return cls(tuple(map(float, f.mean(axis=0))), tuple(map(float, sd)))

    def transform(self, dset: DiscontinuitySet) -> np.ndarray:
        return (dset.features() - np.array(self.mean)) / np.array(self.std)

    def inverse(self, z: np.ndarray) -> np.ndarray:
        """Back to natural units; dip direction reduced modulo 360."""
        f = np.asarray(z, dtype=float) * np.array(self.std) + np.array(self.mean)
        out = np.empty_like(f)
        out[:, 0] = normalize_dip_direction(f[:, 0])
        out[:, 1] = f[:, 1]
        with np.errstate(over="ignore"):
            out[:, 2] = np.exp(f[:, 2])
        return out

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(tuple(map(float, d["mean"])), tuple(map(float, d["std"])))


def batches(prng, n: int, batch_size: int) -> np.ndarray:
    """Row indices for one optimisation step: everything if it fits, else a random subset."""
    if n <= batch_size:
        return np.arange(n)
    return prng.permutations(n, 1)[0, :batch_size]
