"""Fuzzy cognitive map engine.

A concept map is a labeled, signed, weighted digraph. One synchronous
update recomputes every node from the previous state only:

    value[j] <- f(sum_i weights[i][j] * value[i])

where ``f`` is a bivalent, trivalent, or sigmoid squashing function.
There is no self-memory term: the diagonal of the weight matrix must be
zero, so a node with no incoming edges settles at ``f(0)`` after one
step and stays there. Iteration stops at a fixed point (max-norm change
below tolerance), a limit cycle (a previously seen state recurs), or an
iteration cap.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

BIVALENT = "bivalent"
TRIVALENT = "trivalent"
SIGMOID = "sigmoid"
_TRANSFORMS = (BIVALENT, TRIVALENT, SIGMOID)

FIXED_POINT = "fixed-point"
LIMIT_CYCLE = "limit-cycle"
MAX_ITERATIONS = "max-iterations"

# Questionnaire answer levels mapped onto the uniform five-point grid.
LIKERT_WEIGHTS = {
    "Not at all": 0.0,
    "A little": 0.25,
    "Moderately": 0.5,
    "Mostly": 0.75,
    "Completely": 1.0,
}

_BUNDLED_MAPS = (
    "michael_scenario1",
    "grace_scenario1",
    "michael_scenario2",
    "grace_scenario2",
)


class DimensionMismatchError(ValueError):
    """State length does not match the map's node count."""


def transform(kind: str, n: float, c: float = 5.0) -> float:
    """Apply one squashing function to a weighted input sum.

    bivalent: 0 for n <= 0, else 1. trivalent: -1 for n <= -0.5, 1 for
    n >= 0.5, else 0. sigmoid: 1 / (1 + exp(-c * n)) with steepness c.
    """
    if kind == BIVALENT:
        return 0.0 if n <= 0 else 1.0
    if kind == TRIVALENT:
        if n <= -0.5:
            return -1.0
        if n >= 0.5:
            return 1.0
        return 0.0
    if kind == SIGMOID:
        if c <= 0:
            raise ValueError(f"sigmoid steepness must be > 0 (got {c})")
        return 1.0 / (1.0 + math.exp(-c * n))
    raise ValueError(f"unknown transformation function {kind!r}")


@dataclass(frozen=True)
class ConceptMap:
    """Labeled nodes plus the connection matrix.

    ``weights[i][j]`` is the influence of node i on node j, in [-1, 1].
    The diagonal must be zero (no self-feedback).
    """

    labels: tuple[str, ...]
    weights: tuple[tuple[float, ...], ...]
    transform: str = SIGMOID
    c: float = 5.0

    def __post_init__(self):
        n = len(self.labels)
        if len(self.weights) != n or any(len(row) != n for row in self.weights):
            raise ValueError(
                f"weights must be a {n}x{n} matrix matching the label count"
            )
        for i, row in enumerate(self.weights):
            for j, w in enumerate(row):
                if abs(w) > 1.0:
                    raise ValueError(
                        f"weight [{i}][{j}] = {w} outside [-1, 1]"
                    )
            if row[i] != 0.0:
                raise ValueError(
                    f"diagonal weight [{i}][{i}] = {row[i]} must be 0 (no self-feedback)"
                )
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"unknown transformation function {self.transform!r}")
        if self.transform == SIGMOID and self.c <= 0:
            raise ValueError(f"sigmoid steepness must be > 0 (got {self.c})")

    @property
    def node_count(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class StateVector:
    """One fuzzy activation per node, at iteration k."""

    values: tuple[float, ...]
    iteration: int = 0


@dataclass(frozen=True)
class Trajectory:
    states: tuple[StateVector, ...]
    terminal: str  # FIXED_POINT | LIMIT_CYCLE | MAX_ITERATIONS

    @property
    def final(self) -> StateVector:
        return self.states[-1]


def step(cmap: ConceptMap, state: StateVector) -> StateVector:
    """One synchronous update of every node from the k-state only."""
    if len(state.values) != cmap.node_count:
        raise DimensionMismatchError(
            f"state has {len(state.values)} values for a {cmap.node_count}-node map"
        )
    values = state.values
    weights = cmap.weights
    new_values = []
    for j in range(cmap.node_count):
        total = 0.0
        for i in range(cmap.node_count):
            w = weights[i][j]
            if w:
                total += w * values[i]
        new_values.append(transform(cmap.transform, total, cmap.c))
    return StateVector(values=tuple(new_values), iteration=state.iteration + 1)


def _max_norm(a: Sequence[float], b: Sequence[float]) -> float:
    return max(abs(x - y) for x, y in zip(a, b))


def run(
    cmap: ConceptMap,
    initial: StateVector,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> Trajectory:
    """Iterate until a fixed point, a limit cycle, or ``max_iter``.

    The returned trajectory includes the initial state. A fixed point is
    declared when the max-norm change of one step falls below ``tol``; a
    limit cycle when any earlier state recurs within ``tol``.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1 (got {max_iter})")
    if tol <= 0:
        raise ValueError(f"tol must be > 0 (got {tol})")
    states = [initial]
    current = initial
    for _ in range(max_iter):
        nxt = step(cmap, current)
        states.append(nxt)
        if _max_norm(nxt.values, current.values) < tol:
            return Trajectory(states=tuple(states), terminal=FIXED_POINT)
        for earlier in states[:-2]:
            if _max_norm(nxt.values, earlier.values) < tol:
                return Trajectory(states=tuple(states), terminal=LIMIT_CYCLE)
        current = nxt
    return Trajectory(states=tuple(states), terminal=MAX_ITERATIONS)


def elicit_weights(
    labels: Sequence[str],
    answers: Iterable[tuple[str, str, str, str]],
) -> tuple[tuple[float, ...], ...]:
    """Build a connection matrix from questionnaire answers.

    Each answer is (from_node, to_node, sign, level) with sign in
    {"+", "-"} and level one of the five agreement levels. The weight is
    ``sign * grid(level)`` on the uniform grid {0, 0.25, 0.5, 0.75, 1}.
    Unanswered pairs stay 0 (independent concepts).
    """
    index = {label: i for i, label in enumerate(labels)}
    n = len(labels)
    matrix = [[0.0] * n for _ in range(n)]
    seen: set[tuple[str, str]] = set()
    for origin, target, sign, level in answers:
        if origin not in index or target not in index:
            raise ValueError(f"unknown node in answer ({origin!r} -> {target!r})")
        if origin == target:
            raise ValueError(f"self-influence answer for {origin!r} is not allowed")
        pair = (origin, target)
        if pair in seen:
            raise ValueError(f"duplicate answer for pair {origin!r} -> {target!r}")
        seen.add(pair)
        if level not in LIKERT_WEIGHTS:
            raise ValueError(f"unknown agreement level {level!r}")
        if sign not in ("+", "-"):
            raise ValueError(f"sign must be '+' or '-' (got {sign!r})")
        magnitude = LIKERT_WEIGHTS[level]
        matrix[index[origin]][index[target]] = (
            magnitude if sign == "+" else -magnitude
        )
    return tuple(tuple(row) for row in matrix)


# --- map documents and bundled assets --------------------------------------
#
# A map document is JSON with keys: labels, weights (row-major), transform, c.


def map_to_document(cmap: ConceptMap) -> dict:
    return {
        "labels": list(cmap.labels),
        "weights": [list(row) for row in cmap.weights],
        "transform": cmap.transform,
        "c": cmap.c,
    }


def map_from_document(doc: dict) -> ConceptMap:
    missing = [key for key in ("labels", "weights") if key not in doc]
    if missing:
        raise ValueError(f"map document missing keys: {', '.join(missing)}")
    return ConceptMap(
        labels=tuple(str(label) for label in doc["labels"]),
        weights=tuple(tuple(float(w) for w in row) for row in doc["weights"]),
        transform=str(doc.get("transform", SIGMOID)),
        c=float(doc.get("c", 5.0)),
    )


def load_map(path: str | Path) -> ConceptMap:
    with open(path, encoding="utf-8") as handle:
        return map_from_document(json.load(handle))


def save_map(cmap: ConceptMap, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(map_to_document(cmap), handle, indent=2)
        handle.write("\n")


def bundled_map_names() -> tuple[str, ...]:
    return _BUNDLED_MAPS


def bundled_map(name: str) -> ConceptMap:
    """Load one of the packaged concept maps by short name."""
    if name not in _BUNDLED_MAPS:
        raise KeyError(
            f"unknown bundled map {name!r} (expected one of {', '.join(_BUNDLED_MAPS)})"
        )
    payload = resources.files("agilesim.data").joinpath(f"{name}.json").read_text(
        encoding="utf-8"
    )
    return map_from_document(json.loads(payload))


def trajectory_to_csv(trajectory: Trajectory, labels: Sequence[str]) -> str:
    """Render a trajectory as CSV: iteration column plus one per node."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["iteration", *labels])
    for state in trajectory.states:
        writer.writerow([state.iteration, *[repr(v) for v in state.values]])
    return buffer.getvalue()
