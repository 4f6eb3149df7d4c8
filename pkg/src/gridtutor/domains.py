"""Domain pools: environment files, domain manifests, and loading.

A domain ships as a directory holding a manifest (``domain.json``,
schema ``domain/v1``) plus one file per environment (schema ``env/v1``)
split between ``teaching/`` and ``heldout/`` subdirectories. Unknown
fields in either schema are ignored so documents can grow compatibly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .constraints import ConstraintSet, HalfSpaceConstraint, PROVENANCE_PRIOR
from .errors import SchemaError
from .mdp import FEATURE_NAMES, GridEnvironment, MDPSpec
from .sphere import unit

ENV_SCHEMA = "env/v1"
DOMAIN_SCHEMA = "domain/v1"

DIFFICULTIES = ("low", "medium", "high")

_CELL_KINDS = ("wall", "mud", "recharge", "path", "skateboard")


def env_to_doc(env: GridEnvironment) -> dict:
    """Serializable ``env/v1`` document for one environment."""
    board = (env.skateboard,) if env.skateboard is not None else ()
    cells = []
    for kind, coords in (("wall", env.walls), ("mud", env.mud),
                         ("recharge", env.recharge), ("path", env.path),
                         ("skateboard", board)):
        cells.extend({"at": [x, y], "kind": kind} for x, y in sorted(coords, key=lambda c: (c[1], c[0])))
    doc = {
        "schema_version": ENV_SCHEMA,
        "id": env.id,
        "domain": env.domain,
        "width": env.width,
        "height": env.height,
        "start": list(env.start),
        "goal": list(env.goal),
        "cells": cells,
    }
    if env.domain == "skateboard":
        doc["start_carrying"] = env.start_carrying
    return doc


def env_from_doc(doc: dict) -> GridEnvironment:
    if doc.get("schema_version") != ENV_SCHEMA:
        raise SchemaError(f"expected {ENV_SCHEMA}, got {doc.get('schema_version')!r}")
    try:
        by_kind: dict[str, set] = {k: set() for k in _CELL_KINDS}
        for cell in doc.get("cells", ()):
            kind = cell["kind"]
            if kind not in by_kind:
                raise SchemaError(f"unknown cell kind {kind!r}")
            by_kind[kind].add(tuple(cell["at"]))
        boards = sorted(by_kind["skateboard"])
        if len(boards) > 1:
            raise SchemaError("at most one skateboard cell is allowed")
        return GridEnvironment(
            id=doc["id"],
            domain=doc["domain"],
            width=doc["width"],
            height=doc["height"],
            start=tuple(doc["start"]),
            goal=tuple(doc["goal"]),
            walls=frozenset(by_kind["wall"]),
            mud=frozenset(by_kind["mud"]),
            recharge=frozenset(by_kind["recharge"]),
            path=frozenset(by_kind["path"]),
            skateboard=boards[0] if boards else None,
            start_carrying=bool(doc.get("start_carrying", False)),
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed environment document: {exc}") from exc


@dataclass(frozen=True)
class HeldOutTest:
    env: GridEnvironment
    difficulty: str

    def __post_init__(self) -> None:
        if self.difficulty not in DIFFICULTIES:
            raise SchemaError(f"unknown difficulty {self.difficulty!r}")


@dataclass(frozen=True)
class Domain:
    """A named curriculum pool with its reward ground truth."""

    name: str
    weight_proportions: tuple[float, ...]
    gamma: float
    horizon: int
    budget: int
    prior: ConstraintSet
    teaching: tuple[GridEnvironment, ...]
    held_out: tuple[HeldOutTest, ...]

    @property
    def w_star(self) -> np.ndarray:
        return unit(np.asarray(self.weight_proportions, dtype=float))

    @property
    def feature_names(self) -> tuple[str, str, str]:
        return FEATURE_NAMES[self.name]

    def spec_for(self, env: GridEnvironment,
                 weights: np.ndarray | None = None) -> MDPSpec:
        w = self.w_star if weights is None else unit(np.asarray(weights, dtype=float))
        return MDPSpec(env=env, weights=w, gamma=self.gamma, horizon=self.horizon)

    def teaching_env(self, env_id: str) -> GridEnvironment:
        for env in self.teaching:
            if env.id == env_id:
                return env
        raise KeyError(env_id)

    def validate(self) -> None:
        teach_ids = {e.id for e in self.teaching}
        held_ids = {h.env.id for h in self.held_out}
        if teach_ids & held_ids:
            raise SchemaError(f"held-out tests overlap the teaching pool: {teach_ids & held_ids}")
        for env in list(self.teaching) + [h.env for h in self.held_out]:
            if env.domain != self.name:
                raise SchemaError(f"environment {env.id} belongs to {env.domain}, not {self.name}")


def domain_to_doc(domain: Domain) -> dict:
    return {
        "schema_version": DOMAIN_SCHEMA,
        "domain": domain.name,
        "feature_names": list(FEATURE_NAMES[domain.name]),
        "weight_proportions": list(domain.weight_proportions),
        "gamma": domain.gamma,
        "horizon": domain.horizon,
        "budget": domain.budget,
        "prior_normals": [list(c.normal) for c in domain.prior],
        "teaching": [e.id for e in domain.teaching],
        "held_out": [{"id": h.env.id, "difficulty": h.difficulty} for h in domain.held_out],
    }


def save_domain(domain: Domain, root: Path) -> None:
    """Write the manifest and one file per environment under root."""
    root = Path(root)
    (root / "teaching").mkdir(parents=True, exist_ok=True)
    (root / "heldout").mkdir(parents=True, exist_ok=True)
    for env in domain.teaching:
        _dump(env_to_doc(env), root / "teaching" / f"{env.id}.json")
    for held in domain.held_out:
        _dump(env_to_doc(held.env), root / "heldout" / f"{held.env.id}.json")
    _dump(domain_to_doc(domain), root / "domain.json")


def load_domain(root: Path) -> Domain:
    root = Path(root)
    manifest_path = root / "domain.json"
    if not manifest_path.is_file():
        raise SchemaError(f"no domain manifest at {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    if doc.get("schema_version") != DOMAIN_SCHEMA:
        raise SchemaError(f"expected {DOMAIN_SCHEMA}, got {doc.get('schema_version')!r}")
    try:
        prior = ConstraintSet(tuple(
            HalfSpaceConstraint(np.asarray(n, dtype=float), PROVENANCE_PRIOR)
            for n in doc.get("prior_normals", ())))
        teaching = tuple(
            env_from_doc(json.loads((root / "teaching" / f"{env_id}.json").read_text()))
            for env_id in doc["teaching"])
        held = tuple(
            HeldOutTest(
                env=env_from_doc(json.loads((root / "heldout" / f"{h['id']}.json").read_text())),
                difficulty=h["difficulty"])
            for h in doc["held_out"])
        domain = Domain(
            name=doc["domain"],
            weight_proportions=tuple(float(v) for v in doc["weight_proportions"]),
            gamma=float(doc["gamma"]),
            horizon=int(doc["horizon"]),
            budget=int(doc["budget"]),
            prior=prior,
            teaching=teaching,
            held_out=held,
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise SchemaError(f"malformed domain at {root}: {exc}") from exc
    domain.validate()
    return domain


def builtin_domain_names() -> list[str]:
    base = resources.files("gridtutor").joinpath("data")
    return sorted(p.name for p in base.iterdir()
                  if p.is_dir() and p.joinpath("domain.json").is_file())


def builtin_domain(name: str) -> Domain:
    base = resources.files("gridtutor").joinpath("data").joinpath(name)
    if not base.joinpath("domain.json").is_file():
        raise SchemaError(f"no built-in domain named {name!r}")
    with resources.as_file(base) as root:
        return load_domain(Path(root))


def _dump(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
