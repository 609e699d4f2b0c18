"""Behavioral-distance and mechanism metrics over trajectory logs.

Distances are step-aligned over paired episodes: log ``i`` of one ECM is
compared with log ``i`` of another, step by step.

Trajectory files are CSV with header
``episode, step, a_0 .. a_{d_a-1}, s_0 .. s_{d_s-1}``. Each episode has
``T + 1`` rows (steps ``0..T``); the action cells of the final row are empty
because an episode of ``T`` actions visits ``T + 1`` states.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .simworld import TrajectoryLog


@dataclass(frozen=True)
class DistanceMatrix:
    ids: tuple
    d: np.ndarray

    def mean_offdiag(self) -> dict:
        n = len(self.ids)
        return {i: float((self.d[k].sum() - self.d[k, k]) / (n - 1)) for k, i in enumerate(self.ids)}


@dataclass(frozen=True)
class HandoffSummary:
    mean: np.ndarray
    variance: np.ndarray
    shift: float

    @property
    def width(self) -> float:
        return float(self.variance.sum())


def _check_pair(a: Sequence[TrajectoryLog], b: Sequence[TrajectoryLog]) -> None:
    if len(a) != len(b) or not a:
        raise ValueError(f"need equal, nonzero episode counts, got {len(a)} and {len(b)}")
    for i, (x, y) in enumerate(zip(a, b)):
        if x.actions.shape != y.actions.shape:
            raise ValueError(f"episode {i}: action shapes differ {x.actions.shape} vs {y.actions.shape}")


def mean_action_l2(trajs_a: Sequence[TrajectoryLog], trajs_b: Sequence[TrajectoryLog]) -> float:
    """Mean over episodes and steps of ``||a_t^A - a_t^B||_2``."""
    _check_pair(trajs_a, trajs_b)
    A = np.stack([t.actions for t in trajs_a])
    B = np.stack([t.actions for t in trajs_b])
    return float(np.linalg.norm(A - B, axis=-1).mean())


def pairwise_distances(trajs: Mapping[Hashable, Sequence[TrajectoryLog]]) -> DistanceMatrix:
    ids = tuple(trajs)
    if len(ids) < 2:
        raise ValueError("pairwise distances need at least two ECMs")
    n = len(ids)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = mean_action_l2(trajs[ids[i]], trajs[ids[j]])
    return DistanceMatrix(ids, d)


def w2_diag_gaussian(mu1, var1, mu2, var2) -> float:
    mu1, var1, mu2, var2 = (np.asarray(v, dtype=float) for v in (mu1, var1, mu2, var2))
    if not (mu1.shape == var1.shape == mu2.shape == var2.shape):
        raise ValueError("means and variances must share one dimension")
    if (var1 < 0).any() or (var2 < 0).any():
        raise ValueError("variances must be nonnegative")
    return float(math.sqrt(np.sum((mu1 - mu2) ** 2) + np.sum((np.sqrt(var1) - np.sqrt(var2)) ** 2)))


def handoff_stats(end_states: Mapping[Hashable, np.ndarray]) -> dict[Hashable, HandoffSummary]:
    """Per-ECM centroid, per-dimension variance and shift from the pooled centroid.

    The pooled centroid weights each ECM equally (mean of the per-ECM means).
    Variances are population variances, so a single sample has width 0.
    """
    groups = {}
    for key, x in end_states.items():
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] == 0:
            raise ValueError(f"ECM {key!r} has no end-state samples")
        groups[key] = x
    if not groups:
        raise ValueError("no ECMs given")
    means = {k: x.mean(axis=0) for k, x in groups.items()}
    pooled = np.mean(list(means.values()), axis=0)
    return {
        k: HandoffSummary(means[k], x.var(axis=0), float(np.linalg.norm(means[k] - pooled)))
        for k, x in groups.items()
    }


def pairwise_w2(summaries: Mapping[Hashable, HandoffSummary]) -> DistanceMatrix:
    ids = tuple(summaries)
    d = np.zeros((len(ids), len(ids)))
    for i, a in enumerate(ids):
        for j in range(i + 1, len(ids)):
            b = ids[j]
            d[i, j] = d[j, i] = w2_diag_gaussian(summaries[a].mean, summaries[a].variance, summaries[b].mean, summaries[b].variance)
    return DistanceMatrix(ids, d)


def smoothness(traj: TrajectoryLog) -> float:
    """Mean step-to-step action change."""
    a = traj.actions
    if a.shape[0] < 2:
        raise ValueError("smoothness needs at least two actions")
    return float(np.linalg.norm(np.diff(a, axis=0), axis=1).mean())


def path_length(traj: TrajectoryLog) -> float:
    return float(np.linalg.norm(np.diff(traj.states, axis=0), axis=1).sum())


def dominance_rank(values: Mapping[Hashable, float], dominant: Hashable, direction: str = "descending") -> tuple[int, bool]:
    """1-based rank of ``dominant`` and whether it ties with another ECM.

    Rank counts the ECMs strictly ahead of the dominant one, so tied ECMs share
    the best rank of their group; the tie is reported via the flag.
    """
    if direction not in ("descending", "ascending"):
        raise ValueError(f"direction must be 'descending' or 'ascending', got {direction!r}")
    if dominant not in values:
        raise KeyError(f"dominant ECM {dominant!r} not among the ranked ECMs")
    v = values[dominant]
    ahead = sum((x > v) if direction == "descending" else (x < v) for k, x in values.items() if k != dominant)
    tied = any(x == v for k, x in values.items() if k != dominant)
    return ahead + 1, tied


# -- trajectory file format -------------------------------------------------

def write_trajectories(path: str | Path, logs: Sequence[TrajectoryLog]) -> None:
    if not logs:
        raise ValueError("no trajectories to write")
    d_a = logs[0].actions.shape[1]
    d_s = logs[0].states.shape[1]
    header = ["episode", "step"] + [f"a_{j}" for j in range(d_a)] + [f"s_{j}" for j in range(d_s)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for ep, log in enumerate(logs):
            T = log.actions.shape[0]
            for t in range(T + 1):
                acts = [repr(float(x)) for x in log.actions[t]] if t < T else [""] * d_a
                w.writerow([ep, t, *acts, *(repr(float(x)) for x in log.states[t])])


def read_trajectories(path: str | Path) -> list[TrajectoryLog]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trajectory file")
    header = rows[0]
    if header[:2] != ["episode", "step"]:
        raise ValueError(f"{path}: header must start with 'episode,step'")
    a_cols = [i for i, h in enumerate(header) if h.startswith("a_")]
    s_cols = [i for i, h in enumerate(header) if h.startswith("s_")]
    episodes: dict[int, list[list[str]]] = {}
    for r in rows[1:]:
        episodes.setdefault(int(r[0]), []).append(r)
    logs = []
    for ep in sorted(episodes):
        rs = sorted(episodes[ep], key=lambda r: int(r[1]))
        states = np.array([[float(r[i]) for i in s_cols] for r in rs])
        actions = np.array([[float(r[i]) for i in a_cols] for r in rs[:-1]]).reshape(len(rs) - 1, len(a_cols))
        logs.append(TrajectoryLog(actions, states))
    return logs
