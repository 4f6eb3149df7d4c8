"""Shared fixtures and environment builders for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from gridtutor.mdp import DELIVERY, GridEnvironment, MDPSpec
from gridtutor.sphere import unit

DELIVERY_WEIGHTS = unit(np.array([-3.0, 3.5, -1.0]))


def corridor_env(length: int = 5, mud_at: int | None = None, env_id: str = "corridor"):
    """1 x length corridor, start left, goal right, optional single mud cell."""
    mud = frozenset() if mud_at is None else frozenset({(mud_at, 0)})
    return GridEnvironment(id=env_id, domain=DELIVERY, width=length, height=1,
                           start=(0, 0), goal=(length - 1, 0), mud=mud)


def detour_env(env_id: str = "detour"):
    """5x3 grid with one mud cell on the straight route; detour costs 2 actions."""
    return GridEnvironment(id=env_id, domain=DELIVERY, width=5, height=3,
                           start=(0, 1), goal=(4, 1), mud=frozenset({(2, 1)}))


def random_delivery_env(rng: np.random.Generator, env_id: str) -> GridEnvironment:
    """Random 5x5 delivery grid with a reachable goal and spread-out features."""
    while True:
        cells = [(x, y) for x in range(5) for y in range(5)]
        walls = {c for c in cells if rng.random() < 0.12}
        open_cells = [c for c in cells if c not in walls]
        if len(open_cells) < 6:
            continue
        idx = rng.choice(len(open_cells), size=2, replace=False)
        start, goal = open_cells[int(idx[0])], open_cells[int(idx[1])]
        if abs(start[0] - goal[0]) + abs(start[1] - goal[1]) < 3:
            continue
        rest = [c for c in open_cells if c not in (start, goal)]
        mud = {c for c in rest if rng.random() < 0.2}
        recharge = {c for c in rest if c not in mud and rng.random() < 0.08}
        env = GridEnvironment(id=env_id, domain=DELIVERY, width=5, height=5,
                              start=start, goal=goal, walls=frozenset(walls),
                              mud=frozenset(mud), recharge=frozenset(recharge))
        if _reachable(env):
            return env


def _reachable(env: GridEnvironment) -> bool:
    seen = {env.start}
    frontier = [env.start]
    while frontier:
        x, y = frontier.pop()
        for dx, dy in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            c = (x + dx, y + dy)
            if env.passable(c) and c not in seen:
                seen.add(c)
                frontier.append(c)
    return env.goal in seen


@pytest.fixture
def delivery_weights():
    return DELIVERY_WEIGHTS.copy()


def spec_for(env: GridEnvironment, weights=None, gamma: float = 1.0,
             horizon: int = 20) -> MDPSpec:
    w = DELIVERY_WEIGHTS if weights is None else unit(np.asarray(weights, dtype=float))
    return MDPSpec(env=env, weights=w, gamma=gamma, horizon=horizon)
