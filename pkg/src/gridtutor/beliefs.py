"""Particle-filter model of a learner's reward beliefs.

Beliefs live on the unit 2-sphere of normalized reward weights. Each
half-space constraint updates the filter through a two-branch density:
uniform on the consistent side, a von Mises-Fisher tail on the
inconsistent side, continuous across the constraint boundary. The filter
resets when an observation conflicts with nearly all current mass, and
adapts its particle count through KLD resampling when the effective
sample size collapses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constraints import ConstraintSet, HalfSpaceConstraint
from .errors import EmptyRegionError
from .sphere import normal_quantile, sample_uniform_sphere, sample_vmf, equal_area_bins, unit

# stream tags keep every stochastic operation on its own rng sequence
_OP_INIT, _OP_RESET, _OP_RESAMPLE, _OP_SAMPLE = 0, 1, 2, 3


@dataclass(frozen=True)
class CustomDistParams:
    """Normalization constants of the two-branch constraint density."""

    mu: np.ndarray
    kappa: float
    c1: float
    c2: float

    @classmethod
    def for_kappa(cls, mu: np.ndarray, kappa: float) -> "CustomDistParams":
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        c1 = 1.0 + (1.0 - math.exp(-kappa)) / kappa
        c2 = (math.exp(kappa) - math.exp(-kappa)) / kappa
        return cls(mu=unit(np.asarray(mu, dtype=float)), kappa=kappa, c1=c1, c2=c2)


def custom_pdf(x: np.ndarray, params: CustomDistParams) -> np.ndarray:
    """Density of the constraint likelihood at unit vectors x.

    Uniform 1/(2 pi c1) where mu . x >= 0; a scaled von Mises-Fisher tail
    below, with c2 chosen so the two branches meet continuously at the
    boundary and the total mass is one.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = x @ params.mu
    k, c1, c2 = params.kappa, params.c1, params.c2
    uniform = 1.0 / (2.0 * np.pi * c1)
    tail = (c2 * k * np.exp(k * t)) / (2.0 * c1 * np.pi * (math.exp(k) - math.exp(-k)))
    return np.where(t >= 0.0, uniform, tail)


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int = 2000
    kappa: float = 2.0
    w_threshold: float = 1e-3       # reset when retained mass ratio drops below
    ess_fraction: float = 0.5       # resample when n_eff < ess_fraction * n_particles
    kld_epsilon: float = 0.05
    kld_delta: float = 0.01
    bin_resolution: int = 144       # equal-area bins for KLD occupancy
    n_min: int | None = None        # particle count clamps; default [n, 2n]
    n_max: int | None = None
    jitter_kappa: float = 500.0
    candidate_factor: int = 40      # candidate pool size per requested belief
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_particles < 1:
            raise ValueError("n_particles must be positive")
        if not (0.0 < self.ess_fraction <= 1.0):
            raise ValueError("ess_fraction must lie in (0, 1]")
        # defaulting the lower clamp to the initial count keeps the resample
        # trigger (ess_fraction * n_particles) from re-firing on every update
        if self.n_min is None:
            object.__setattr__(self, "n_min", self.n_particles)
        if self.n_max is None:
            object.__setattr__(self, "n_max", 2 * self.n_particles)
        if not (self.n_min <= self.n_particles <= self.n_max):
            raise ValueError("need n_min <= n_particles <= n_max")


@dataclass(frozen=True)
class ParticleSet:
    """Weighted unit vectors; treat as immutable, operations return new sets."""

    positions: np.ndarray          # (n, 3) unit rows
    weights: np.ndarray            # (n,) nonnegative, summing to one
    prior: ConstraintSet
    seed: int
    draws: int                     # count of stochastic operations so far

    def __post_init__(self) -> None:
        self.positions.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class KldReport:
    occupied_bins: int
    n_required: int
    n_drawn: int


@dataclass(frozen=True)
class UpdateReport:
    mass_ratio: float
    reset: bool
    resampled: bool
    ess: float
    n_before: int
    n_after: int
    kld: KldReport | None = None


def _rng(ps_seed: int, draws: int, op: int) -> np.random.Generator:
    return np.random.default_rng((ps_seed, draws, op))


def _sample_region(rng: np.random.Generator, region: ConstraintSet, n: int) -> np.ndarray:
    """Uniform points on the sphere restricted to a constraint region."""
    out: list[np.ndarray] = []
    have = 0
    for _ in range(500):
        batch = sample_uniform_sphere(rng, max(4 * n, 256))
        ok = batch[region.satisfies(batch)]
        if len(ok):
            out.append(ok)
            have += len(ok)
        if have >= n:
            return np.vstack(out)[:n]
    raise EmptyRegionError(f"could not sample {n} points from the constraint region")


def init_particles(cfg: FilterConfig, prior: ConstraintSet | None = None) -> ParticleSet:
    """Uniform particles over the prior region with uniform weights."""
    prior = prior or ConstraintSet()
    rng = _rng(cfg.seed, 0, _OP_INIT)
    pos = _sample_region(rng, prior, cfg.n_particles)
    w = np.full(cfg.n_particles, 1.0 / cfg.n_particles)
    return ParticleSet(positions=pos, weights=w, prior=prior, seed=cfg.seed, draws=1)


def n_eff(weights: np.ndarray) -> float:
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if s <= 0:
        return 0.0
    w = w / s
    return float(1.0 / np.sum(w * w))


def reset(ps: ParticleSet, recent: ConstraintSet, cfg: FilterConfig) -> ParticleSet:
    """Reinitialize after belief collapse: half the particles uniform on the
    region of the recent conflicting constraints, half on the prior region."""
    rng = _rng(ps.seed, ps.draws, _OP_RESET)
    n = cfg.n_particles
    n_recent = n // 2
    region = recent if len(recent) else ps.prior
    pos_recent = _sample_region(rng, region, n_recent)
    pos_prior = _sample_region(rng, ps.prior, n - n_recent)
    pos = np.vstack([pos_recent, pos_prior])
    w = np.full(n, 1.0 / n)
    return ParticleSet(positions=pos, weights=w, prior=ps.prior,
                       seed=ps.seed, draws=ps.draws + 1)


def _kld_bound(k: int, epsilon: float, z: float) -> float:
    if k < 2:
        return 0.0
    a = 2.0 / (9.0 * (k - 1))
    return (k - 1) / (2.0 * epsilon) * (1.0 - a + math.sqrt(a) * z) ** 3


def _required_counts(bins: np.ndarray, cfg: FilterConfig, z: float) -> np.ndarray:
    """Per-prefix required particle count for the running bin occupancy.

    Entry i is the clamped KLD bound for the number of distinct bins among
    bins[:i+1]; occupancy of one bin keeps the lower clamp.
    """
    is_new = np.zeros(len(bins), dtype=bool)
    _, first = np.unique(bins, return_index=True)
    is_new[first] = True
    k = np.cumsum(is_new)
    kk = np.maximum(k, 2).astype(float)
    a = 2.0 / (9.0 * (kk - 1.0))
    bound = (kk - 1.0) / (2.0 * cfg.kld_epsilon) * (1.0 - a + np.sqrt(a) * z) ** 3
    req = np.minimum(cfg.n_max, np.maximum(cfg.n_min, np.ceil(bound))).astype(int)
    return np.where(k > 1, req, cfg.n_min)


def _systematic_indices(rng: np.random.Generator, weights: np.ndarray, m: int) -> np.ndarray:
    """Systematic resampling: m source indices proportional to weights."""
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    cum = np.cumsum(w)
    cum[-1] = 1.0
    u = (rng.uniform(0.0, 1.0) + np.arange(m)) / m
    return np.searchsorted(cum, u, side="left")


def kld_resample(ps: ParticleSet, cfg: FilterConfig) -> tuple[ParticleSet, KldReport]:
    """Resample to an adaptive particle count.

    Draws through a permuted systematic sample until the count reaches the
    KLD bound for the number of occupied equal-area bins, clamped to
    [n_min, n_max]; jitters each survivor with a narrow von Mises-Fisher
    kernel, and returns uniform weights.
    """
    rng = _rng(ps.seed, ps.draws, _OP_RESAMPLE)
    z = normal_quantile(1.0 - cfg.kld_delta)
    idx = _systematic_indices(rng, ps.weights, cfg.n_max)
    idx = idx[rng.permutation(cfg.n_max)]
    cand = ps.positions[idx]
    bins = equal_area_bins(cand, cfg.bin_resolution)
    required_at = _required_counts(bins, cfg, z)
    met = np.nonzero(np.arange(1, cfg.n_max + 1) >= required_at)[0]
    count = int(met[0]) + 1 if len(met) else cfg.n_max
    k = int(len(np.unique(bins[:count])))
    required = int(required_at[count - 1])
    pos = cand[:count]
    if cfg.jitter_kappa and np.isfinite(cfg.jitter_kappa):
        offsets = sample_vmf(rng, np.array([0.0, 0.0, 1.0]), cfg.jitter_kappa, count)
        # rotate each unit offset so its pole aligns with the particle
        pos = _rotate_pole_to(pos, offsets)
    w = np.full(count, 1.0 / count)
    new = ParticleSet(positions=pos, weights=w, prior=ps.prior,
                      seed=ps.seed, draws=ps.draws + 1)
    return new, KldReport(occupied_bins=k, n_required=required, n_drawn=count)


def _rotate_pole_to(targets: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Rotate z-pole samples onto each target direction (Rodrigues form)."""
    t = np.asarray(targets, dtype=float)
    o = np.asarray(offsets, dtype=float)
    c = t[:, 2]
    axis = np.stack([-t[:, 1], t[:, 0], np.zeros(len(t))], axis=1)
    s = np.linalg.norm(axis, axis=1)
    ok = s > 1e-12
    axis_u = np.divide(axis, np.where(ok, s, 1.0)[:, None])
    out = (o * c[:, None]
           + np.cross(axis_u, o) * s[:, None]
           + axis_u * (np.einsum("ij,ij->i", axis_u, o) * (1.0 - c))[:, None])
    # poles parallel to z need no rotation; antiparallel flip about the x axis
    aligned = ~ok & (c > 0.0)
    anti = ~ok & (c <= 0.0)
    out[aligned] = o[aligned]
    flipped = o[anti].copy()
    flipped[:, 1:] *= -1.0
    out[anti] = flipped
    return unit(out)


def update(ps: ParticleSet, constraint: HalfSpaceConstraint | None,
           cfg: FilterConfig) -> tuple[ParticleSet, UpdateReport]:
    """Bayes step for one constraint; None is the identity."""
    n0 = len(ps)
    if constraint is None:
        return ps, UpdateReport(mass_ratio=1.0, reset=False, resampled=False,
                                ess=n_eff(ps.weights), n_before=n0, n_after=n0)
    params = CustomDistParams.for_kappa(constraint.normal, cfg.kappa)
    like = custom_pdf(ps.positions, params)
    prev_mass = float(ps.weights.sum())
    new_raw = ps.weights * like
    new_mass = float(new_raw.sum())
    # relative collapse of the raw mass; scale-free in the particle count
    ratio = new_mass / prev_mass if prev_mass > 0 else 0.0
    if new_mass <= 0.0 or ratio < cfg.w_threshold:
        fresh = reset(ps, ConstraintSet((constraint,)), cfg)
        return fresh, UpdateReport(mass_ratio=ratio, reset=True, resampled=False,
                                   ess=float(len(fresh)), n_before=n0,
                                   n_after=len(fresh))
    w = new_raw / new_mass
    ess = n_eff(w)
    mid = ParticleSet(positions=ps.positions, weights=w, prior=ps.prior,
                      seed=ps.seed, draws=ps.draws)
    if ess < cfg.ess_fraction * cfg.n_particles:
        resampled, kld = kld_resample(mid, cfg)
        return resampled, UpdateReport(mass_ratio=ratio, reset=False, resampled=True,
                                       ess=ess, n_before=n0, n_after=len(resampled),
                                       kld=kld)
    return mid, UpdateReport(mass_ratio=ratio, reset=False, resampled=False,
                             ess=ess, n_before=n0, n_after=n0)


def apply_constraints(ps: ParticleSet, cs, cfg: FilterConfig) -> tuple[ParticleSet, list[UpdateReport]]:
    """Fold a sequence of constraints through update()."""
    reports = []
    for c in cs:
        ps, rep = update(ps, c, cfg)
        reports.append(rep)
    return ps, reports


def region_mass(ps: ParticleSet, cs: ConstraintSet) -> float:
    """Posterior mass on the region satisfying every constraint."""
    ok = cs.satisfies(ps.positions)
    total = float(ps.weights.sum())
    return float(ps.weights[ok].sum() / total) if total > 0 else 0.0


def weighted_mean_direction(ps: ParticleSet) -> np.ndarray:
    m = ps.weights @ ps.positions
    norm = float(np.linalg.norm(m))
    if norm < 1e-12:
        return ps.positions[int(np.argmax(ps.weights))].copy()
    return m / norm


def sample_beliefs(ps: ParticleSet, k: int, cfg: FilterConfig) -> np.ndarray:
    """k spread-out representatives of the posterior.

    Systematically resamples a candidate pool, seeds with the candidate of
    highest posterior weight, then greedily adds the candidate farthest (in
    smallest geodesic distance to the chosen set) from the selection. The
    greedy rule is the classic 2-approximation: its dispersion is never
    worse than half the best achievable.
    """
    if k < 1:
        raise ValueError("k must be positive")
    rng = _rng(ps.seed, ps.draws, _OP_SAMPLE)
    m = min(len(ps), cfg.candidate_factor * k)
    idx = _systematic_indices(rng, ps.weights, m)
    cand = ps.positions[idx]
    uniq, first = np.unique(np.round(cand, 12), axis=0, return_index=True)
    order = np.sort(first)
    cand = cand[order]
    src_w = ps.weights[idx[order]]
    if len(cand) <= k:
        return cand.copy()
    chosen = [int(np.argmax(src_w))]
    dist = np.arccos(np.clip(cand @ cand[chosen[0]], -1.0, 1.0))
    while len(chosen) < k:
        dist[chosen] = -1.0
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        d_new = np.arccos(np.clip(cand @ cand[nxt], -1.0, 1.0))
        dist = np.minimum(dist, d_new)
    return cand[chosen].copy()
