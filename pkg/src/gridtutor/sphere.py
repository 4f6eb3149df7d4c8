"""Geometry helpers on the unit 2-sphere."""
from __future__ import annotations

import numpy as np
from scipy.stats import norm


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize a vector (or rows of a matrix) to unit length."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return v / n
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero row")
    return v / norms


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two unit vectors, in radians."""
    d = float(np.clip(np.dot(a, b), -1.0, 1.0))
    return float(np.arccos(d))


def geodesic_to_set(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Geodesic distance from each row of points to the unit vector x."""
    d = np.clip(points @ x, -1.0, 1.0)
    return np.arccos(d)


def sample_uniform_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n points uniformly on the unit sphere."""
    v = rng.normal(size=(n, 3))
    return unit(v)


def orthonormal_tangents(mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to mu and to each other."""
    mu = unit(mu)
    # pick the axis least aligned with mu to avoid degeneracy
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(mu)))] = 1.0
    e1 = unit(np.cross(mu, helper))
    e2 = np.cross(mu, e1)
    return e1, e2


def sample_vmf(rng: np.random.Generator, mu: np.ndarray, kappa: float, n: int) -> np.ndarray:
    """Draw n points from a von Mises-Fisher distribution on the 2-sphere.

    Uses the closed-form inverse CDF for the cosine of the polar angle,
    which exists in three dimensions.
    """
    mu = unit(mu)
    if kappa <= 0:
        return sample_uniform_sphere(rng, n)
    u = rng.uniform(size=n)
    # W ~ density proportional to exp(kappa*w) on [-1, 1]
    w = 1.0 + np.log(u + (1.0 - u) * np.exp(-2.0 * kappa)) / kappa
    w = np.clip(w, -1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    e1, e2 = orthonormal_tangents(mu)
    r = np.sqrt(np.maximum(0.0, 1.0 - w * w))
    pts = (w[:, None] * mu[None, :]
           + (r * np.cos(phi))[:, None] * e1[None, :]
           + (r * np.sin(phi))[:, None] * e2[None, :])
    return unit(pts)


def equal_area_bins(points: np.ndarray, total_bins: int) -> np.ndarray:
    """Assign each point an equal-area latitude/longitude bin index.

    The sphere is cut into B bands of equal z-extent (equal area by the
    Archimedes projection) and B longitude sectors, B = round(sqrt(total)).
    """
    b = max(1, int(round(np.sqrt(total_bins))))
    z = np.clip(points[:, 2], -1.0, 1.0)
    zi = np.minimum((((z + 1.0) / 2.0) * b).astype(int), b - 1)
    az = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    ai = np.minimum((az / (2.0 * np.pi) * b).astype(int), b - 1)
    return zi * b + ai


def normal_quantile(p: float) -> float:
    """Quantile of the standard normal distribution."""
    return float(norm.ppf(p))
