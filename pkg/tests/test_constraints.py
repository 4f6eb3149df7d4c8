"""Constraint extraction, minimal banks, areas, and scaffolding."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridtutor import mdp
from gridtutor.constraints import (ConstraintSet, HalfSpaceConstraint, bec_area,  # noqa: F401
                                   constraint_from_pair, demo_constraints,
                                   deduplicate, feature_support, policy_bec,
                                   remove_redundant, scaffold_kcs)
from gridtutor.constraints import test_response_constraint as response_constraint
from gridtutor.errors import InvalidDemonstrationError
from gridtutor.mdp import optimal_trajectory, trajectory_from_actions
from gridtutor.sphere import angle_between, unit

from .conftest import DELIVERY_WEIGHTS, corridor_env, detour_env, spec_for
from . import oracles

MUD_LOWER = unit(np.array([-1.0, 0.0, 2.0]))
ACTION_PRIOR = ConstraintSet((HalfSpaceConstraint(np.array([0.0, 0.0, -1.0]),
                                                  provenance="prior"),))


def test_constraint_from_pair_canonical_mud_detour():
    c = constraint_from_pair(np.array([0.0, 0.0, 7.0]), np.array([1.0, 0.0, 5.0]))
    assert np.allclose(c.normal, MUD_LOWER)


def test_constraint_from_pair_degenerate_is_none():
    mu = np.array([1.0, 0.0, 5.0])
    assert constraint_from_pair(mu, mu + 1e-12) is None


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_constraint_pair_antisymmetry(a, b):
    a, b = np.array(a), np.array(b)
    fwd = constraint_from_pair(a, b)
    rev = constraint_from_pair(b, a)
    if fwd is None:
        assert rev is None
    else:
        assert np.allclose(fwd.normal, -rev.normal)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 40.0))
def test_constraint_pair_scale_invariance(scale):
    a = np.array([0.0, 1.0, 3.0])
    b = np.array([1.0, 0.0, 5.0])
    c1 = constraint_from_pair(a, b)
    c2 = constraint_from_pair(scale * a, scale * b)
    assert angle_between(c1.normal, c2.normal) < 1e-9


def test_demo_conveys_mud_constraint_against_naive_belief():
    env = detour_env()
    spec = spec_for(env)
    demo = optimal_trajectory(spec)
    naive = [unit(np.array([0.0, 0.0, -1.0]))]  # actions cost, mud free
    cs = demo_constraints(spec, demo, naive)
    assert len(cs) == 1
    assert angle_between(cs[0].normal, MUD_LOWER) < 1e-6


def test_demo_conveys_nothing_to_agreeing_belief():
    env = detour_env()
    spec = spec_for(env)
    demo = optimal_trajectory(spec)
    cs = demo_constraints(spec, demo, [spec.weights])
    assert len(cs) == 0


def test_suboptimal_demo_rejected():
    env = detour_env()
    spec = spec_for(env)
    bad = trajectory_from_actions(env, env.initial_state(),
                                  ["right", "right", "right", "right"])
    with pytest.raises(InvalidDemonstrationError):
        demo_constraints(spec, bad, [spec.weights])


def test_demo_constraints_match_enumeration_oracle():
    env = detour_env()
    spec = spec_for(env, horizon=10)
    demo = optimal_trajectory(spec)
    rng = np.random.default_rng(3)
    beliefs = [unit(v) for v in rng.normal(size=(5, 3))]
    got = demo_constraints(spec, demo, beliefs)
    mu_demo = oracles.trajectory_counts(env, demo, 1.0)
    want = []
    for w in beliefs:
        cf = oracles.best_trajectory(env, demo.start, w, 1.0, 10)
        mu_cf = oracles.trajectory_counts(env, cf, 1.0)
        diff = np.array(mu_demo) - np.array(mu_cf)
        if np.linalg.norm(diff) > 1e-9:
            want.append(unit(diff))
    want = deduplicate([HalfSpaceConstraint(n) for n in want])
    assert len(got) == len(want)
    for c in got:
        assert min(angle_between(c.normal, o.normal) for o in want) < 1e-6


def test_equally_rewarding_response_grades_correct():
    # two symmetric detours around mud earn identical reward
    env = detour_env()
    spec = spec_for(env)
    correct = optimal_trajectory(spec)
    other = trajectory_from_actions(env, env.initial_state(),
                                    ["down", "right", "right", "right", "up", "right"])
    assert response_constraint(spec, correct, other) is None


def test_worse_response_yields_separating_constraint():
    env = detour_env()
    spec = spec_for(env)
    correct = optimal_trajectory(spec)
    through = trajectory_from_actions(env, env.initial_state(),
                                      ["right", "right", "right", "right"])
    c = response_constraint(spec, correct, through)
    assert c is not None
    assert angle_between(c.normal, MUD_LOWER) < 1e-6
    assert float(spec.weights @ c.normal) > 0


def test_redundant_constraint_removed_within_prior():
    a = HalfSpaceConstraint(np.array([-1.0, 0.0, 2.0]))
    b = HalfSpaceConstraint(np.array([-1.0, 0.0, 1.0]))
    kept = remove_redundant(ConstraintSet((a, b)), within=ACTION_PRIOR, seed=1)
    assert len(kept) == 1
    assert angle_between(kept[0].normal, MUD_LOWER) < 1e-6


def test_duplicate_constraints_collapse():
    a = HalfSpaceConstraint(np.array([-1.0, 0.0, 2.0]))
    b = HalfSpaceConstraint(np.array([-2.0, 0.0, 4.0]))
    assert len(deduplicate([a, b])) == 1


def test_non_redundant_pair_survives():
    a = HalfSpaceConstraint(np.array([1.0, 0.0, 0.0]))
    b = HalfSpaceConstraint(np.array([0.0, 1.0, 0.0]))
    kept = remove_redundant(ConstraintSet((a, b)), seed=2)
    assert len(kept) == 2


def test_bec_area_orthogonal_quarter():
    cs = ConstraintSet((HalfSpaceConstraint(np.array([1.0, 0.0, 0.0])),
                        HalfSpaceConstraint(np.array([0.0, 1.0, 0.0]))))
    frac, se = bec_area(cs, n_samples=400_000, seed=5)
    assert frac == pytest.approx(0.25, abs=0.002)
    assert se < 0.001


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.0])
def test_bec_area_matches_lune_formula(theta):
    n1 = np.array([1.0, 0.0, 0.0])
    n2 = np.array([np.cos(theta), np.sin(theta), 0.0])
    cs = ConstraintSet((HalfSpaceConstraint(n1), HalfSpaceConstraint(n2)))
    frac, _ = bec_area(cs, n_samples=400_000, seed=6)
    want = (np.pi - theta) / (2.0 * np.pi)
    assert frac == pytest.approx(want, abs=0.003)
    quad = oracles.sphere_region_fraction([n1, n2], n_grid=250)
    assert frac == pytest.approx(quad, abs=0.003)


def test_policy_bec_contains_mud_tradeoff_and_true_weights():
    envs = [detour_env(), corridor_env(5, mud_at=2, env_id="mudline")]
    cs = policy_bec(envs, DELIVERY_WEIGHTS, gamma=1.0, horizon=15,
                    prior=ACTION_PRIOR, seed=0)
    assert len(cs) >= 1
    assert any(angle_between(c.normal, MUD_LOWER) < 1e-6 for c in cs)
    assert all(float(DELIVERY_WEIGHTS @ c.normal) > 1e-9 for c in cs)


def test_scaffold_orders_and_groups_by_feature_support():
    cs = ConstraintSet((
        HalfSpaceConstraint(np.array([-1.0, 0.0, 2.0])),   # mud vs action
        HalfSpaceConstraint(np.array([1.0, 0.0, -4.0])),   # mud vs action
        HalfSpaceConstraint(np.array([0.0, 1.0, 3.0])),    # recharge vs action
        HalfSpaceConstraint(np.array([-1.0, 1.0, 1.0])),   # everything
    ))
    lessons = scaffold_kcs(cs, ACTION_PRIOR, domain="delivery",
                           feature_names=("mud", "recharge", "action"))
    assert [l.label for l in lessons] == ["mud vs action", "recharge vs action",
                                          "combined tradeoffs"]
    assert [len(l.kcs) for l in lessons] == [2, 1, 1]
    ids = [kc.id for l in lessons for kc in l.kcs]
    assert ids == [f"kc-delivery-{i}" for i in range(4)]
    # the mud bound compatible with the prior region is introduced first
    first = lessons[0].kcs[0]
    assert angle_between(first.normal, unit(np.array([1.0, 0.0, -4.0]))) < 1e-9


def test_feature_support_tolerates_zero_components():
    assert feature_support(unit(np.array([-1.0, 0.0, 2.0]))) == {0, 2}
    assert feature_support(unit(np.array([1.0, 1.0, 1.0]))) == {0, 1, 2}
