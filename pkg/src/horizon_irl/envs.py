"""Seeded Gridworld / Objectworld generators and environment files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from .mdp import TabularMdp, ValidationError, optimal_policy
from .seeding import rng

GAMMA0 = 0.99
# (dx, dy); index 0 is "stay" so the tie-break favours standing still.
MOVES = np.array([(0, 0), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)])
TASKS = ("gridworld-simple", "gridworld-hard", "objectworld-linear", "objectworld-nonlinear")


@dataclass(frozen=True)
class GridSpec:
    width: int = 10
    height: int = 10
    n_goals: int = 4
    goal_reward: float = 1.0
    move_noise: float = 0.1
    n_actions: int = 9
    seed: int = 0

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("grid dimensions must be positive")
        if not 1 <= self.n_goals <= self.width * self.height:
            raise ValidationError("n_goals must be between 1 and width * height")
        if not 0.0 <= self.move_noise <= 1.0:
            raise ValidationError("move_noise must be a probability")
        if self.n_actions != len(MOVES):
            raise ValidationError("only the 9-action (8 compass + stay) model is supported")
        if self.goal_reward <= 0:
            raise ValidationError("goal_reward must be positive")


@dataclass(frozen=True)
class ObjectworldSpec:
    width: int = 10
    height: int = 10
    n_objects: int = 10
    n_colors: int = 2
    nonlinear: bool = False
    move_noise: float = 0.1
    seed: int = 0

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("grid dimensions must be positive")
        if not 0 <= self.n_objects <= self.width * self.height:
            raise ValidationError("n_objects must be between 0 and width * height")
        if self.n_colors < 2:
            raise ValidationError("objectworld needs at least two colours")
        if not 0.0 <= self.move_noise <= 1.0:
            raise ValidationError("move_noise must be a probability")


@dataclass
class Environment:
    """A generated task: MDP, ground-truth expert and bookkeeping for files/plots."""

    task: str
    mdp: TabularMdp
    expert: np.ndarray
    width: int
    height: int
    seed: int
    gamma0: float = GAMMA0
    features: np.ndarray | None = None
    goals: list = field(default_factory=list)
    objects: list = field(default_factory=list)  # (state, outer, inner)
    params: dict = field(default_factory=dict)

    @property
    def n_states(self):
        return self.mdp.n_states


def grid_transitions(width: int, height: int, move_noise: float = 0.1) -> np.ndarray:
    """Intended move with prob ``1 - noise``, else a uniformly random move; walls block."""
    n = width * height
    k = len(MOVES)
    xs, ys = np.arange(n) % width, np.arange(n) // width
    dest = np.empty((n, k), dtype=int)
    for a, (dx, dy) in enumerate(MOVES):
        nx, ny = xs + dx, ys + dy
        inside = (nx >= 0) & (nx < width) & (ny >= 0) & (ny < height)
        dest[:, a] = np.where(inside, ny * width + nx, np.arange(n))
    P = np.zeros((n, k, n))
    rows = np.arange(n)
    for a in range(k):
        P[rows, a, dest[:, a]] += 1.0 - move_noise
        for b in range(k):
            P[rows, a, dest[:, b]] += move_noise / k
    return P


def is_ergodic(mdp: TabularMdp) -> bool:
    """True if transitions supported under *every* action form one strong component."""
    common = np.all(mdp.transitions > 0, axis=1)
    n_comp, _ = connected_components(common.astype(int), directed=True, connection="strong")
    return n_comp == 1


def make_gridworld(spec: GridSpec, gamma0: float = GAMMA0):
    spec.validate()
    n = spec.width * spec.height
    goals = np.sort(rng(spec.seed).choice(n, size=spec.n_goals, replace=False))
    R = np.zeros((n, len(MOVES)))
    R[goals, :] = spec.goal_reward
    mdp = TabularMdp(grid_transitions(spec.width, spec.height, spec.move_noise), R,
                     r_max=spec.goal_reward)
    expert, _ = optimal_policy(mdp, gamma0)
    return mdp, expert, goals


def chebyshev_distances(width, height, cells) -> np.ndarray:
    """``(n_states, len(cells))`` Chebyshev distances from every state to each cell."""
    n = width * height
    xs, ys = np.arange(n) % width, np.arange(n) // width
    cells = np.asarray(cells, dtype=int)
    if cells.size == 0:
        return np.zeros((n, 0))
    cx, cy = cells % width, cells // width
    return np.maximum(np.abs(xs[:, None] - cx[None, :]), np.abs(ys[:, None] - cy[None, :]))


def _min_dist(dist, mask):
    if not np.any(mask):
        return np.full(dist.shape[0], np.inf)
    return dist[:, mask].min(axis=1)


def objectworld_rewards(spec: ObjectworldSpec, cells, outer) -> np.ndarray:
    """Per-state reward before the non-negativity shift."""
    n = spec.width * spec.height
    r = np.zeros(n)
    outer = np.asarray(outer, dtype=int)
    if not spec.nonlinear:
        cells = np.asarray(cells, dtype=int)
        r[cells[outer == 0]] = 3.0
        r[cells[outer == 1]] = 1.0
        return r
    dist = chebyshev_distances(spec.width, spec.height, cells)
    d0 = _min_dist(dist, outer == 0)
    d1 = _min_dist(dist, outer == 1)
    r[d1 <= 3] = -1.0
    r[(d0 <= 3) & (d1 <= 2)] = 1.0
    return r


def objectworld_features(spec: ObjectworldSpec, cells, outer, inner) -> np.ndarray:
    """Binary threshold features ``1{dist to colour c <= k}``, outer colours then inner."""
    dist = chebyshev_distances(spec.width, spec.height, cells)
    ks = np.arange(1, max(spec.width, spec.height) + 1)
    blocks = []
    for colours in (np.asarray(outer), np.asarray(inner)):
        for c in range(spec.n_colors):
            d = _min_dist(dist, colours == c) if len(colours) else np.full(dist.shape[0], np.inf)
            blocks.append((d[:, None] <= ks[None, :]).astype(float))
    return np.hstack(blocks)


def make_objectworld(spec: ObjectworldSpec, gamma0: float = GAMMA0):
    spec.validate()
    n = spec.width * spec.height
    g = rng(spec.seed)
    cells = np.sort(g.choice(n, size=spec.n_objects, replace=False)) if spec.n_objects else np.zeros(0, int)
    outer = g.integers(spec.n_colors, size=spec.n_objects)
    inner = g.integers(spec.n_colors, size=spec.n_objects)
    r = objectworld_rewards(spec, cells, outer)
    if spec.nonlinear:
        r = r + 1.0  # constant shift keeps rewards in [0, r_max]; optimal policies unchanged
    r_max = 2.0 if spec.nonlinear else 3.0
    R = np.repeat(r[:, None], len(MOVES), axis=1)
    mdp = TabularMdp(grid_transitions(spec.width, spec.height, spec.move_noise), R, r_max=r_max)
    expert, _ = optimal_policy(mdp, gamma0)
    features = objectworld_features(spec, cells, outer, inner)
    objects = [(int(c), int(o), int(i)) for c, o, i in zip(cells, outer, inner)]
    return mdp, expert, features, objects


def indicator_features(mdp: TabularMdp) -> np.ndarray:
    return np.eye(mdp.n_states)


def make_task(task: str, seed: int, gamma0: float = GAMMA0) -> Environment:
    """Build one of the four benchmark tasks with their default sizes."""
    if task == "gridworld-simple":
        spec = GridSpec(10, 10, 4, seed=seed)
    elif task == "gridworld-hard":
        spec = GridSpec(15, 15, 6, seed=seed)
    elif task in ("objectworld-linear", "objectworld-nonlinear"):
        spec = ObjectworldSpec(nonlinear=task.endswith("nonlinear"), seed=seed)
    else:
        raise ValidationError(f"unknown task {task!r}; expected one of {TASKS}")
    if isinstance(spec, GridSpec):
        mdp, expert, goals = make_gridworld(spec, gamma0)
        return Environment(task, mdp, expert, spec.width, spec.height, seed, gamma0,
                           features=indicator_features(mdp), goals=[int(x) for x in goals],
                           params=_spec_params(spec))
    mdp, expert, features, objects = make_objectworld(spec, gamma0)
    return Environment(task, mdp, expert, spec.width, spec.height, seed, gamma0,
                       features=features, objects=objects, params=_spec_params(spec))


def _spec_params(spec):
    return {k: v for k, v in vars(spec).items() if k != "seed"}


# -- serialisation -----------------------------------------------------------

FORMAT = "horizon-irl-env/1"


def _num(x) -> str:
    return format(float(x), ".17g")


def _array_text(a: np.ndarray) -> str:
    return "[" + ", ".join(_num(x) for x in np.asarray(a, dtype=float).ravel()) + "]"


def dumps_environment(env: Environment) -> str:
    """Self-describing JSON text; reals are written with 17 significant digits.

    Arrays are flattened row-major with their shape stored alongside.
    """
    head = {
        "format": FORMAT,
        "task": env.task,
        "seed": int(env.seed),
        "width": env.width,
        "height": env.height,
        "n_states": env.mdp.n_states,
        "n_actions": env.mdp.n_actions,
        "gamma0": _num(env.gamma0),
        "r_max": _num(env.mdp.r_max),
        "params": env.params,
        "goals": env.goals,
        "objects": [list(o) for o in env.objects],
        "expert": [int(a) for a in env.expert],
    }
    lines = ["{"]
    for key, value in head.items():
        if key in ("gamma0", "r_max"):
            lines.append(f'  "{key}": {value},')
        else:
            lines.append(f'  "{key}": {json.dumps(value, sort_keys=True)},')
    arrays = [("transitions", env.mdp.transitions), ("rewards", env.mdp.rewards)]
    if env.features is not None:
        arrays.append(("features", env.features))
    for i, (key, arr) in enumerate(arrays):
        sep = "," if i < len(arrays) - 1 else ""
        lines.append(f'  "{key}": {{"shape": {json.dumps(list(arr.shape))}, "data": {_array_text(arr)}}}{sep}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads_environment(text: str) -> Environment:
    d = json.loads(text)
    if d.get("format") != FORMAT:
        raise ValidationError(f"not an environment file (format={d.get('format')!r})")

    def arr(key):
        block = d[key]
        return np.array(block["data"], dtype=float).reshape(block["shape"])

    mdp = TabularMdp(arr("transitions"), arr("rewards"), r_max=float(d["r_max"]))
    if mdp.n_states != d["n_states"] or mdp.n_actions != d["n_actions"]:
        raise ValidationError("declared dimensions do not match array shapes")
    return Environment(
        task=d["task"],
        mdp=mdp,
        expert=np.array(d["expert"], dtype=int),
        width=int(d["width"]),
        height=int(d["height"]),
        seed=int(d["seed"]),
        gamma0=float(d["gamma0"]),
        features=arr("features") if "features" in d else None,
        goals=list(d["goals"]),
        objects=[tuple(o) for o in d["objects"]],
        params=d["params"],
    )


def save_environment(env: Environment, path) -> Path:
    path = Path(path)
    path.write_text(dumps_environment(env))
    return path


def load_environment(path) -> Environment:
    return loads_environment(Path(path).read_text())
