"""Shipped curriculum pools for the delivery and skateboard domains.

Each builder returns a Domain whose teaching pool realizes a compact
knowledge-component bank under the domain's ground-truth weights, plus
six held-out evaluation environments at three difficulty tiers. Run
``python3 -m gridtutor.catalog`` to regenerate the packaged JSON files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .constraints import ConstraintSet, HalfSpaceConstraint, PROVENANCE_PRIOR
from .domains import Domain, HeldOutTest, save_domain
from .mdp import GridEnvironment

Coord = tuple[int, int]


def _delivery(env_id: str, width: int, height: int, start: Coord, goal: Coord,
              mud: tuple[Coord, ...] = (), recharge: tuple[Coord, ...] = (),
              walls: tuple[Coord, ...] = ()) -> GridEnvironment:
    return GridEnvironment(
        id=env_id, domain="delivery", width=width, height=height,
        start=start, goal=goal, walls=frozenset(walls),
        mud=frozenset(mud), recharge=frozenset(recharge))


def _skate(env_id: str, width: int, height: int, start: Coord, goal: Coord,
           board: Coord | None = None, path: tuple[Coord, ...] = (),
           walls: tuple[Coord, ...] = (), carrying: bool = False) -> GridEnvironment:
    return GridEnvironment(
        id=env_id, domain="skateboard", width=width, height=height,
        start=start, goal=goal, walls=frozenset(walls),
        path=frozenset(path), skateboard=board, start_carrying=carrying)


def _prior() -> ConstraintSet:
    # effort aversion: moving can never be intrinsically rewarding
    return ConstraintSet((HalfSpaceConstraint(np.array([0.0, 0.0, -1.0]), PROVENANCE_PRIOR),))


def build_delivery_domain() -> Domain:
    teaching = (
        # avoiding one mud cell is worth a two-step detour
        _delivery("delivery-mud-easy-a", 5, 3, (0, 1), (4, 1), mud=((2, 1),)),
        _delivery("delivery-mud-easy-b", 7, 3, (0, 1), (6, 1), mud=((4, 1),)),
        _delivery("delivery-mud-sidestep", 7, 3, (0, 1), (6, 1), mud=((2, 1), (2, 0))),
        # walled channel: crossing mud beats a four-step detour
        _delivery("delivery-mud-cross-a", 5, 5, (0, 2), (4, 2),
                  mud=((2, 2),), walls=((2, 1), (2, 3))),
        _delivery("delivery-mud-cross-b", 7, 5, (0, 2), (6, 2),
                  mud=((3, 2),), walls=((3, 1), (3, 3))),
        # recharging is worth a two-step detour
        _delivery("delivery-recharge-easy-a", 5, 3, (0, 1), (4, 1), recharge=((2, 0),)),
        _delivery("delivery-recharge-easy-b", 7, 3, (0, 1), (6, 1), recharge=((4, 2),)),
        _delivery("delivery-recharge-twin", 7, 3, (0, 1), (6, 1),
                  recharge=((3, 0), (5, 0))),
        # but not a four-step detour
        _delivery("delivery-recharge-skip-a", 5, 5, (0, 2), (4, 2), recharge=((2, 0),)),
        _delivery("delivery-recharge-skip-b", 7, 5, (0, 2), (6, 2), recharge=((3, 0),)),
        # walled shelf: mud guards a recharge on an equal-length route
        _delivery("delivery-combo-a", 5, 3, (0, 1), (4, 1),
                  mud=((1, 0),), recharge=((2, 0),), walls=((2, 1),)),
        _delivery("delivery-combo-b", 6, 3, (0, 1), (5, 1),
                  mud=((2, 0),), recharge=((3, 0),), walls=((3, 1),)),
        _delivery("delivery-combo-c", 7, 3, (0, 1), (6, 1),
                  mud=((3, 0),), recharge=((4, 0),), walls=((4, 1),)),
    )
    held_out = (
        HeldOutTest(_delivery("delivery-h-low-1", 3, 2, (0, 0), (2, 1),
                              mud=((1, 0),)), "low"),
        HeldOutTest(_delivery("delivery-h-low-2", 3, 2, (0, 0), (2, 1),
                              recharge=((1, 1),)), "low"),
        HeldOutTest(_delivery("delivery-h-med-1", 6, 3, (0, 1), (5, 1),
                              mud=((3, 1),)), "medium"),
        HeldOutTest(_delivery("delivery-h-med-2", 6, 3, (0, 1), (5, 1),
                              recharge=((2, 0),)), "medium"),
        HeldOutTest(_delivery("delivery-h-high-1", 7, 5, (0, 2), (6, 2),
                              mud=((3, 2),), recharge=((5, 1),),
                              walls=((3, 0), (3, 1), (3, 3))), "high"),
        HeldOutTest(_delivery("delivery-h-high-2", 6, 4, (0, 1), (5, 1),
                              mud=((3, 1),), recharge=((1, 3),),
                              walls=((3, 0),)), "high"),
    )
    return Domain(
        name="delivery",
        weight_proportions=(-3.0, 3.5, -1.0),
        gamma=1.0,
        horizon=20,
        budget=11,
        prior=_prior(),
        teaching=teaching,
        held_out=held_out,
    )


def build_skateboard_domain() -> Domain:
    teaching = (
        # riding from the start is worth the pickup
        _skate("skate-ride-easy-a", 4, 1, (0, 0), (3, 0), board=(0, 0)),
        _skate("skate-ride-easy-b", 4, 2, (0, 1), (3, 1), board=(0, 1)),
        _skate("skate-ride-long", 6, 1, (0, 0), (5, 0), board=(0, 0)),
        # fetching a board one row off pays on a long corridor
        _skate("skate-fetch-a", 9, 2, (0, 1), (8, 1), board=(0, 0)),
        _skate("skate-fetch-b", 10, 2, (0, 1), (9, 1), board=(1, 0)),
        _skate("skate-fetch-c", 11, 2, (0, 1), (10, 1), board=(1, 0)),
        # the same fetch is not worth it on a short corridor
        _skate("skate-ride-far-a", 6, 2, (0, 1), (5, 1), board=(0, 0)),
        _skate("skate-ride-far-b", 7, 2, (0, 1), (6, 1), board=(1, 0)),
        _skate("skate-ride-far-c", 8, 2, (0, 1), (7, 1), board=(2, 0)),
        # a five-cell smooth stretch pays for a two-step detour
        _skate("skate-path-scenic-a", 7, 2, (0, 1), (6, 1),
               path=tuple((x, 0) for x in range(1, 6))),
        _skate("skate-path-scenic-b", 8, 2, (0, 1), (7, 1),
               path=tuple((x, 0) for x in range(1, 7))),
        _skate("skate-path-scenic-c", 9, 2, (0, 1), (8, 1),
               path=tuple((x, 0) for x in range(1, 8))),
        # a four-cell stretch does not
        _skate("skate-path-skip-a", 7, 2, (0, 1), (6, 1),
               path=((2, 0), (3, 0), (4, 0), (5, 0))),
        _skate("skate-path-skip-b", 8, 2, (0, 1), (7, 1),
               path=((3, 0), (4, 0), (5, 0), (6, 0))),
        _skate("skate-path-skip-c", 5, 2, (0, 1), (4, 1), path=((2, 0),)),
        # fetching pays here only because the top lane is partly smooth
        _skate("skate-combo-a", 6, 2, (0, 1), (5, 1), board=(0, 0),
               path=((1, 0), (2, 0))),
        _skate("skate-combo-b", 2, 6, (1, 0), (1, 5), board=(0, 0),
               path=((0, 1), (0, 2))),
        # one cell further to the board and the same fetch stops paying
        _skate("skate-combo-c", 6, 2, (0, 1), (5, 1), board=(1, 0),
               path=((2, 0), (3, 0))),
        _skate("skate-combo-d", 2, 6, (1, 0), (1, 5), board=(0, 1),
               path=((0, 2), (0, 3))),
    )
    held_out = (
        HeldOutTest(_skate("skate-h-low-1", 7, 1, (0, 0), (6, 0),
                           board=(0, 0)), "low"),
        HeldOutTest(_skate("skate-h-low-2", 4, 2, (0, 0), (3, 1),
                           path=((1, 0), (2, 0))), "low"),
        HeldOutTest(_skate("skate-h-med-1", 10, 2, (0, 1), (9, 1),
                           board=(0, 0)), "medium"),
        HeldOutTest(_skate("skate-h-med-2", 11, 2, (0, 1), (10, 1),
                           path=tuple((x, 0) for x in range(1, 10))), "medium"),
        HeldOutTest(_skate("skate-h-high-1", 8, 2, (0, 0), (7, 0), carrying=True,
                           path=((2, 1), (3, 1), (4, 1), (5, 1))), "high"),
        HeldOutTest(_skate("skate-h-high-2", 7, 2, (0, 0), (6, 0), carrying=True,
                           path=((2, 1), (3, 1), (4, 1), (5, 1))), "high"),
    )
    return Domain(
        name="skateboard",
        weight_proportions=(0.4, 0.43, -1.0),
        gamma=1.0,
        horizon=60,
        budget=22,
        prior=_prior(),
        teaching=teaching,
        held_out=held_out,
    )


BUILDERS = {
    "delivery": build_delivery_domain,
    "skateboard": build_skateboard_domain,
}


def regenerate(data_root: Path) -> None:
    for name, build in BUILDERS.items():
        save_domain(build(), Path(data_root) / name)


if __name__ == "__main__":
    regenerate(Path(__file__).parent / "data")
