"""Deterministic gridworld MDPs with linear reward features.

Two domains share the machinery. Both use three reward features:

* delivery:   [entered a mud cell, recharged the battery, took an action]
* skateboard: [moved while carrying the skateboard, entered a path cell,
               took an action]

States are plain tuples. Delivery: (x, y, recharged). Skateboard:
(x, y, carrying, skate_x, skate_y) with skate coordinates (-1, -1) while
the skateboard is carried.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidTrajectoryError, UnsolvableEnvironmentError

Coord = tuple[int, int]
State = tuple

UP, DOWN, RIGHT, LEFT, PICKUP, SETDOWN = "up", "down", "right", "left", "pickup", "setdown"
ACTION_ORDER: tuple[str, ...] = (UP, DOWN, RIGHT, LEFT, PICKUP, SETDOWN)
MOVE_DELTAS: dict[str, Coord] = {UP: (0, -1), DOWN: (0, 1), RIGHT: (1, 0), LEFT: (-1, 0)}

DELIVERY = "delivery"
SKATEBOARD = "skateboard"
FEATURE_NAMES: dict[str, tuple[str, str, str]] = {
    DELIVERY: ("mud", "recharge", "action"),
    SKATEBOARD: ("ride", "path", "action"),
}
N_FEATURES = 3

# ties between equal-value actions resolve to the earliest in ACTION_ORDER
TIE_TOL = 1e-9
VALUE_TOL = 1e-8


@dataclass(frozen=True)
class GridEnvironment:
    """A rectangular grid with per-cell attributes and a single goal."""

    id: str
    domain: str
    width: int
    height: int
    start: Coord
    goal: Coord
    walls: frozenset[Coord] = frozenset()
    mud: frozenset[Coord] = frozenset()
    recharge: frozenset[Coord] = frozenset()
    path: frozenset[Coord] = frozenset()
    skateboard: Coord | None = None
    start_carrying: bool = False

    def __post_init__(self) -> None:
        if self.domain not in FEATURE_NAMES:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must have positive extent")
        for label, cell in (("start", self.start), ("goal", self.goal)):
            if not self.in_bounds(cell):
                raise ValueError(f"{label} {cell} out of bounds")
            if cell in self.walls:
                raise ValueError(f"{label} {cell} is a wall")
        if self.domain == SKATEBOARD:
            if self.skateboard is not None and self.skateboard in self.walls:
                raise ValueError("skateboard cannot start inside a wall")
        elif self.skateboard is not None or self.start_carrying:
            raise ValueError("skateboard fields are only valid in the skateboard domain")

    def in_bounds(self, cell: Coord) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def passable(self, cell: Coord) -> bool:
        return self.in_bounds(cell) and cell not in self.walls

    @property
    def feature_names(self) -> tuple[str, str, str]:
        return FEATURE_NAMES[self.domain]

    def feature_cells(self) -> frozenset[tuple[int, int, str]]:
        """Cells that carry a visible reward feature, with their kind."""
        out: set[tuple[int, int, str]] = set()
        for kind, cells in (("mud", self.mud), ("recharge", self.recharge), ("path", self.path)):
            out.update((x, y, kind) for x, y in cells)
        if self.skateboard is not None:
            out.add((*self.skateboard, "skateboard"))
        return frozenset(out)

    def initial_state(self) -> State:
        if self.domain == DELIVERY:
            return (*self.start, 0)
        if self.start_carrying:
            return (*self.start, 1, -1, -1)
        board = self.skateboard if self.skateboard is not None else (-1, -1)
        return (*self.start, 0, *board)

    def is_goal(self, state: State) -> bool:
        return (state[0], state[1]) == self.goal

    def legal_actions(self, state: State) -> tuple[str, ...]:
        if self.is_goal(state):
            return ()
        pos = (state[0], state[1])
        acts = [a for a in (UP, DOWN, RIGHT, LEFT)
                if self.passable((pos[0] + MOVE_DELTAS[a][0], pos[1] + MOVE_DELTAS[a][1]))]
        if self.domain == SKATEBOARD:
            carrying = state[2]
            if not carrying and (state[3], state[4]) == pos:
                acts.append(PICKUP)
            if carrying:
                acts.append(SETDOWN)
        return tuple(acts)

    def next_state(self, state: State, action: str) -> State:
        if action not in self.legal_actions(state):
            raise InvalidTrajectoryError(
                f"action {action!r} is not legal in state {state} of {self.id}")
        x, y = state[0], state[1]
        if action in MOVE_DELTAS:
            dx, dy = MOVE_DELTAS[action]
            if self.domain == DELIVERY:
                recharged = state[2] or int((x + dx, y + dy) in self.recharge)
                return (x + dx, y + dy, recharged)
            return (x + dx, y + dy, *state[2:])
        if action == PICKUP:
            return (x, y, 1, -1, -1)
        return (x, y, 0, x, y)

    def features(self, state: State, action: str, nxt: State) -> np.ndarray:
        """Feature counts earned by one transition."""
        phi = np.zeros(N_FEATURES)
        phi[2] = 1.0
        dest = (nxt[0], nxt[1])
        moved = dest != (state[0], state[1])
        if self.domain == DELIVERY:
            if dest in self.mud:
                phi[0] = 1.0
            if moved and dest in self.recharge and not state[2]:
                phi[1] = 1.0
        else:
            if moved and state[2]:
                phi[0] = 1.0
            if moved and dest in self.path:
                phi[1] = 1.0
        return phi


@dataclass(frozen=True)
class MDPSpec:
    """An environment paired with reward weights, discount, and horizon."""

    env: GridEnvironment
    weights: np.ndarray
    gamma: float = 1.0
    horizon: int = 30

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (N_FEATURES,):
            raise ValueError(f"weights must have shape ({N_FEATURES},)")
        if abs(float(np.linalg.norm(w)) - 1.0) > 1e-6:
            raise ValueError("weights must be unit-norm")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class Trajectory:
    """A legal state/action/state sequence in one environment."""

    env_id: str
    steps: tuple[tuple[State, str, State], ...]

    @property
    def start(self) -> State:
        return self.steps[0][0]

    @property
    def end(self) -> State:
        return self.steps[-1][2]

    def __len__(self) -> int:
        return len(self.steps)

    def actions(self) -> tuple[str, ...]:
        return tuple(a for _, a, _ in self.steps)

    def states(self) -> tuple[State, ...]:
        return (self.start,) + tuple(s for _, _, s in self.steps)


def trajectory_from_actions(env: GridEnvironment, start: State,
                            actions: tuple[str, ...] | list[str]) -> Trajectory:
    """Build a trajectory by stepping the dynamics; raises if any step is illegal."""
    steps = []
    s = start
    for a in actions:
        n = env.next_state(s, a)
        steps.append((s, a, n))
        s = n
    if not steps:
        raise InvalidTrajectoryError("trajectory must contain at least one step")
    return Trajectory(env_id=env.id, steps=tuple(steps))


def validate_trajectory(env: GridEnvironment, traj: Trajectory) -> None:
    """Check chaining and per-step legality against the dynamics."""
    if traj.env_id != env.id:
        raise InvalidTrajectoryError(f"trajectory belongs to {traj.env_id}, not {env.id}")
    prev = None
    for s, a, n in traj.steps:
        if prev is not None and s != prev:
            raise InvalidTrajectoryError("trajectory states do not chain")
        if env.next_state(s, a) != n:
            raise InvalidTrajectoryError(f"step ({s}, {a}) does not lead to {n}")
        prev = n


def feature_counts(env: GridEnvironment, traj: Trajectory, gamma: float = 1.0) -> np.ndarray:
    """Discounted feature counts accumulated along a trajectory."""
    validate_trajectory(env, traj)
    phi = np.zeros(N_FEATURES)
    g = 1.0
    for s, a, n in traj.steps:
        phi += g * env.features(s, a, n)
        g *= gamma
    return phi


def trajectory_reward(env: GridEnvironment, traj: Trajectory, weights: np.ndarray,
                      gamma: float = 1.0) -> float:
    return float(feature_counts(env, traj, gamma) @ np.asarray(weights, dtype=float))


class _Model:
    """Tabular view of one environment: states reachable from the start."""

    def __init__(self, env: GridEnvironment):
        self.env = env
        states: list[State] = []
        index: dict[State, int] = {}
        frontier = [env.initial_state()]
        index[frontier[0]] = 0
        states.append(frontier[0])
        while frontier:
            s = frontier.pop()
            for a in env.legal_actions(s):
                n = env.next_state(s, a)
                if n not in index:
                    index[n] = len(states)
                    states.append(n)
                    frontier.append(n)
        self.states = states
        self.index = index
        n_s, n_a = len(states), len(ACTION_ORDER)
        self.next_idx = np.full((n_s, n_a), -1, dtype=np.int64)
        self.feats = np.zeros((n_s, n_a, N_FEATURES))
        self.terminal = np.zeros(n_s, dtype=bool)
        for i, s in enumerate(states):
            if env.is_goal(s):
                self.terminal[i] = True
                continue
            for j, a in enumerate(ACTION_ORDER):
                if a in env.legal_actions(s):
                    nxt = env.next_state(s, a)
                    self.next_idx[i, j] = index[nxt]
                    self.feats[i, j] = env.features(s, a, nxt)
        self.legal = self.next_idx >= 0

    @cached_property
    def goal_reachable(self) -> bool:
        return bool(self.terminal.any())


_MODEL_CACHE: dict[tuple[str, int], _Model] = {}


def _model_for(env: GridEnvironment) -> _Model:
    key = (env.id, id(env))
    model = _MODEL_CACHE.get(key)
    if model is None:
        model = _Model(env)
        if len(_MODEL_CACHE) > 256:
            _MODEL_CACHE.clear()
        _MODEL_CACHE[key] = model
    return model


@dataclass
class Policy:
    """Greedy policy over finite-horizon values of one MDP."""

    spec: MDPSpec
    _model: _Model = field(repr=False)
    _values: np.ndarray = field(repr=False)  # (k+1, n_states); row k = k-step value

    @property
    def states(self) -> list[State]:
        return self._model.states

    def _row(self, steps_left: int) -> np.ndarray:
        return self._values[min(steps_left, self._values.shape[0] - 1)]

    def value(self, state: State, steps_left: int | None = None) -> float:
        i = self._model.index[state]
        if steps_left is None:
            steps_left = self.spec.horizon
        return float(self._row(steps_left)[i])

    def _q_row(self, i: int, steps_left: int) -> np.ndarray:
        model, spec = self._model, self.spec
        v = self._row(max(steps_left - 1, 0))
        q = model.feats[i] @ spec.weights + spec.gamma * v[np.maximum(model.next_idx[i], 0)]
        return np.where(model.legal[i], q, -np.inf)

    def q_value(self, state: State, action: str, steps_left: int | None = None) -> float:
        if steps_left is None:
            steps_left = self.spec.horizon
        i = self._model.index[state]
        return float(self._q_row(i, steps_left)[ACTION_ORDER.index(action)])

    def action_of(self, state: State, steps_left: int | None = None) -> str:
        """First action in the fixed order within TIE_TOL of the best value."""
        if steps_left is None:
            steps_left = self.spec.horizon
        i = self._model.index[state]
        if self._model.terminal[i]:
            raise ValueError(f"goal state {state} has no action")
        q = self._q_row(i, steps_left)
        best = np.max(q)
        pick = int(np.argmax(q >= best - TIE_TOL))
        return ACTION_ORDER[pick]


def solve(spec: MDPSpec) -> Policy:
    """Finite-horizon value iteration; raises if the goal is unreachable."""
    model = _model_for(spec.env)
    if not model.goal_reachable:
        raise UnsolvableEnvironmentError(
            f"goal {spec.env.goal} unreachable from start in {spec.env.id}")
    n_s = len(model.states)
    rewards = model.feats @ spec.weights  # (n_s, n_a)
    rewards = np.where(model.legal, rewards, -np.inf)
    rows = [np.zeros(n_s)]
    for _ in range(spec.horizon):
        v = rows[-1]
        q = rewards + spec.gamma * v[np.maximum(model.next_idx, 0)]
        v_new = np.where(model.terminal, 0.0, q.max(axis=1))
        rows.append(v_new)
        if np.array_equal(v_new, v):
            break
    return Policy(spec=spec, _model=model, _values=np.vstack(rows))


_POLICY_CACHE: dict[tuple, Policy] = {}


def solve_cached(spec: MDPSpec) -> Policy:
    """solve() with memoization on (environment, weights, gamma, horizon).

    Counterfactual reasoning solves the same environment under many sampled
    reward weights; this cache is what keeps that affordable.
    """
    key = (spec.env.id, id(spec.env), spec.weights.tobytes(), spec.gamma, spec.horizon)
    pol = _POLICY_CACHE.get(key)
    if pol is None:
        pol = solve(spec)
        if len(_POLICY_CACHE) > 20000:
            _POLICY_CACHE.clear()
        _POLICY_CACHE[key] = pol
    return pol


def rollout(policy: Policy, start: State | None = None,
            horizon: int | None = None) -> Trajectory:
    """Greedy rollout; stops at the goal or when the step budget runs out."""
    env = policy.spec.env
    if start is None:
        start = env.initial_state()
    if horizon is None:
        horizon = policy.spec.horizon
    if env.is_goal(start):
        raise InvalidTrajectoryError("cannot roll out from the goal state")
    steps = []
    s = start
    for t in range(horizon):
        a = policy.action_of(s, steps_left=horizon - t)
        n = env.next_state(s, a)
        steps.append((s, a, n))
        s = n
        if env.is_goal(s):
            break
    return Trajectory(env_id=env.id, steps=tuple(steps))


def optimal_trajectory(spec: MDPSpec, start: State | None = None) -> Trajectory:
    return rollout(solve(spec), start=start)
