"""Half-space constraints on reward weights, distilled from behavior.

A demonstration or graded test response pins down the teacher's reward
weights w through linear constraints of the form

    w . (mu_shown - mu_alternative) >= 0

where mu is a vector of discounted feature counts. The set of weights
satisfying every constraint of a policy forms its behavioral equivalence
region on the unit sphere; the minimal constraints spanning it act as the
knowledge components of the curriculum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mdp
from .errors import InvalidDemonstrationError
from .mdp import GridEnvironment, MDPSpec, Trajectory, feature_counts
from .sphere import angle_between, sample_uniform_sphere, unit

ANGLE_TOL = 1e-6
DEGENERATE_NORM = 1e-9

PROVENANCE_DEMO = "demonstration"
PROVENANCE_TEST = "test-response"
PROVENANCE_PRIOR = "prior"
PROVENANCE_POLICY = "policy"


@dataclass(frozen=True, eq=False)
class HalfSpaceConstraint:
    """w . normal >= 0, with provenance describing how it arose."""

    normal: np.ndarray
    provenance: str = PROVENANCE_POLICY
    source: str = ""

    def __post_init__(self) -> None:
        n = unit(np.asarray(self.normal, dtype=float))
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)

    def key(self) -> tuple:
        return tuple(np.round(self.normal, 9))

    def satisfies(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.normal >= 0.0

    def __repr__(self) -> str:
        n = np.round(self.normal, 4)
        return f"HalfSpace({n[0]:+.4f}, {n[1]:+.4f}, {n[2]:+.4f}; {self.provenance})"


@dataclass(frozen=True)
class ConstraintSet:
    """An ordered, duplicate-free collection of half-space constraints."""

    constraints: tuple[HalfSpaceConstraint, ...] = ()

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def __getitem__(self, i: int) -> HalfSpaceConstraint:
        return self.constraints[i]

    def normals(self) -> np.ndarray:
        if not self.constraints:
            return np.zeros((0, 3))
        return np.vstack([c.normal for c in self.constraints])

    def satisfies(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points satisfying every constraint."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.constraints:
            return np.ones(len(points), dtype=bool)
        return np.all(points @ self.normals().T >= 0.0, axis=1)

    def add(self, *cs: HalfSpaceConstraint) -> "ConstraintSet":
        return ConstraintSet(deduplicate(self.constraints + tuple(cs)))

    def union(self, other: "ConstraintSet") -> "ConstraintSet":
        return self.add(*other.constraints)


def deduplicate(cs, tol: float = ANGLE_TOL) -> tuple[HalfSpaceConstraint, ...]:
    """Drop constraints whose normals repeat within an angular tolerance."""
    kept: list[HalfSpaceConstraint] = []
    for c in cs:
        if all(angle_between(c.normal, k.normal) > tol for k in kept):
            kept.append(c)
    return tuple(kept)


def constraint_from_pair(mu_shown: np.ndarray, mu_alt: np.ndarray,
                         provenance: str = PROVENANCE_DEMO,
                         source: str = "") -> HalfSpaceConstraint | None:
    """Constraint normal proportional to the feature-count gap, or None if
    the two behaviors are feature-identical."""
    diff = np.asarray(mu_shown, dtype=float) - np.asarray(mu_alt, dtype=float)
    if float(np.linalg.norm(diff)) < DEGENERATE_NORM:
        return None
    return HalfSpaceConstraint(normal=diff, provenance=provenance, source=source)


def counterfactual_constraints(env: GridEnvironment, gamma: float, horizon: int,
                               shown: Trajectory, beliefs,
                               provenance: str = PROVENANCE_DEMO,
                               source: str = "") -> ConstraintSet:
    """Constraints conveyed by a trajectory to an observer holding the given
    candidate reward beliefs: the shown behavior is at least as good as what
    each belief would have done from the same start."""
    mu_shown = feature_counts(env, shown, gamma)
    out: list[HalfSpaceConstraint] = []
    for w in beliefs:
        spec = MDPSpec(env=env, weights=unit(np.asarray(w, dtype=float)),
                       gamma=gamma, horizon=horizon)
        cf = mdp.rollout(mdp.solve_cached(spec), start=shown.start)
        c = constraint_from_pair(mu_shown, feature_counts(env, cf, gamma),
                                 provenance=provenance, source=source)
        if c is not None:
            out.append(c)
    return ConstraintSet(deduplicate(out))


def demo_constraints(spec: MDPSpec, demo: Trajectory, beliefs) -> ConstraintSet:
    """Constraints a demonstration conveys against sampled learner beliefs.

    The demonstration must be optimal under spec.weights; anything else is a
    bug upstream and is rejected rather than silently taught.
    """
    pol = mdp.solve_cached(spec)
    reward = mdp.trajectory_reward(spec.env, demo, spec.weights, spec.gamma)
    best = pol.value(demo.start)
    if reward < best - 1e-9:
        raise InvalidDemonstrationError(
            f"demonstration on {spec.env.id} achieves {reward:.6f}, optimal is {best:.6f}")
    return counterfactual_constraints(spec.env, spec.gamma, spec.horizon, demo,
                                      beliefs, provenance=PROVENANCE_DEMO,
                                      source=spec.env.id)


def test_response_constraint(spec: MDPSpec, correct: Trajectory,
                             response: Trajectory) -> HalfSpaceConstraint | None:
    """Constraint separating the correct answer from a response, or None when
    the response earns equal reward (equally optimal answers count as correct)."""
    r_correct = mdp.trajectory_reward(spec.env, correct, spec.weights, spec.gamma)
    r_resp = mdp.trajectory_reward(spec.env, response, spec.weights, spec.gamma)
    if abs(r_correct - r_resp) <= 1e-9:
        return None
    return constraint_from_pair(feature_counts(spec.env, correct, spec.gamma),
                                feature_counts(spec.env, response, spec.gamma),
                                provenance=PROVENANCE_TEST, source=spec.env.id)


def policy_constraints(spec: MDPSpec) -> list[HalfSpaceConstraint]:
    """Constraints pinning the optimal policy of one environment: from every
    reachable state, acting optimally beats each one-step deviation followed
    by optimal behavior."""
    pol = mdp.solve_cached(spec)
    env = spec.env
    out: list[HalfSpaceConstraint] = []
    mu_cache: dict = {}

    def mu_from(state) -> np.ndarray:
        if state not in mu_cache:
            if env.is_goal(state):
                mu_cache[state] = np.zeros(mdp.N_FEATURES)
            else:
                traj = mdp.rollout(pol, start=state)
                mu_cache[state] = feature_counts(env, traj, spec.gamma)
        return mu_cache[state]

    for s in pol.states:
        if env.is_goal(s):
            continue
        mu_star = mu_from(s)
        chosen = pol.action_of(s)
        for a in env.legal_actions(s):
            if a == chosen:
                continue
            n = env.next_state(s, a)
            mu_alt = env.features(s, a, n) + spec.gamma * mu_from(n)
            c = constraint_from_pair(mu_star, mu_alt,
                                     provenance=PROVENANCE_POLICY, source=env.id)
            # equal-reward alternatives pin nothing the policy prefers
            if c is not None and float(spec.weights @ c.normal) > 1e-9:
                out.append(c)
    return out


def policy_bec(envs, weights: np.ndarray, gamma: float, horizon: int,
               prior: ConstraintSet | None = None,
               seed: int = 0) -> ConstraintSet:
    """Minimal constraint set characterizing optimal behavior across a pool."""
    weights = unit(np.asarray(weights, dtype=float))
    raw: list[HalfSpaceConstraint] = []
    for env in envs:
        spec = MDPSpec(env=env, weights=weights, gamma=gamma, horizon=horizon)
        raw.extend(policy_constraints(spec))
    cs = ConstraintSet(deduplicate(raw))
    return remove_redundant(cs, within=prior or ConstraintSet(), seed=seed)


def remove_redundant(cs: ConstraintSet, within: ConstraintSet | None = None,
                     n_samples: int = 100_000, seed: int = 0) -> ConstraintSet:
    """Drop constraints implied (on the unit sphere) by the remaining ones.

    Implication is judged on the region satisfying `within`: a constraint is
    redundant when no sampled point satisfies all other kept constraints and
    the context while violating it.
    """
    within = within or ConstraintSet()
    cands = list(deduplicate(cs.constraints))
    if not cands:
        return ConstraintSet()
    rng = np.random.default_rng(seed)
    pts = sample_uniform_sphere(rng, n_samples)
    ctx_ok = within.satisfies(pts) if len(within) else np.ones(len(pts), dtype=bool)
    sat = np.stack([c.satisfies(pts) for c in cands], axis=1)
    alive = [True] * len(cands)
    # deterministic scan order; re-test against survivors after each removal
    for i in range(len(cands)):
        others = [j for j in range(len(cands)) if alive[j] and j != i]
        region = ctx_ok.copy()
        for j in others:
            region &= sat[:, j]
        binding = bool(np.any(region & ~sat[:, i]))
        if not binding:
            alive[i] = False
    return ConstraintSet(tuple(c for c, a in zip(cands, alive) if a))


def bec_area(cs: ConstraintSet, n_samples: int = 1_000_000,
             seed: int = 0) -> tuple[float, float]:
    """Monte Carlo fraction of the unit sphere satisfying every constraint,
    with its standard error."""
    rng = np.random.default_rng(seed)
    pts = sample_uniform_sphere(rng, n_samples)
    ok = cs.satisfies(pts)
    p = float(np.mean(ok))
    se = float(np.sqrt(max(p * (1.0 - p), 1e-12) / n_samples))
    return p, se


@dataclass(frozen=True)
class KnowledgeComponent:
    """One teachable constraint with the features it involves."""

    id: str
    constraint: HalfSpaceConstraint
    feature_support: frozenset[int]

    @property
    def normal(self) -> np.ndarray:
        return self.constraint.normal


@dataclass(frozen=True)
class Lesson:
    """A batch of knowledge components sharing a feature theme."""

    label: str
    kcs: tuple[KnowledgeComponent, ...]


def feature_support(normal: np.ndarray, tol: float = 1e-9) -> frozenset[int]:
    return frozenset(int(i) for i in np.flatnonzero(np.abs(normal) > tol))


def _distance_from_region(normal: np.ndarray, region_points: np.ndarray) -> float:
    """Smallest geodesic angle from a direction to a sampled region."""
    d = np.clip(region_points @ normal, -1.0, 1.0)
    return float(np.arccos(np.max(d)))


def scaffold_kcs(cs: ConstraintSet, prior: ConstraintSet, domain: str,
                 feature_names=("f0", "f1", "f2"), seed: int = 0) -> tuple[Lesson, ...]:
    """Group minimal constraints into ordered lessons.

    Lessons progress from the first feature vs action cost, to the second
    feature vs action cost, to constraints mixing all three. Within a lesson,
    constraints closer to the prior knowledge region come first.
    """
    rng = np.random.default_rng(seed)
    pts = sample_uniform_sphere(rng, 4096)
    region = pts[prior.satisfies(pts)] if len(prior) else pts

    def group_of(support: frozenset[int]) -> int:
        if support <= {0, 2}:
            return 0
        if support <= {1, 2}:
            return 1
        return 2

    labels = (f"{feature_names[0]} vs {feature_names[2]}",
              f"{feature_names[1]} vs {feature_names[2]}",
              "combined tradeoffs")
    buckets: dict[int, list[tuple[float, tuple, HalfSpaceConstraint]]] = {0: [], 1: [], 2: []}
    for c in cs:
        g = group_of(feature_support(c.normal))
        dist = _distance_from_region(c.normal, region)
        buckets[g].append((dist, c.key(), c))
    lessons = []
    counter = 0
    for g in (0, 1, 2):
        if not buckets[g]:
            continue
        kcs = []
        for dist, _, c in sorted(buckets[g], key=lambda t: (t[0], t[1])):
            kcs.append(KnowledgeComponent(id=f"kc-{domain}-{counter}", constraint=c,
                                          feature_support=feature_support(c.normal)))
            counter += 1
        lessons.append(Lesson(label=labels[g], kcs=tuple(kcs)))
    return tuple(lessons)
