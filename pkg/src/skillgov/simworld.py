"""Synthetic, seed-deterministic world of ECMs, compositions and trajectories.

Composition success follows a weighted linear blend of per-phase competences,
clamped to [0, 1]. Episode ``i`` of any cell succeeds iff a shared uniform
``u_i`` (keyed by base seed and episode index only) falls below the cell's
success probability, so every cell in a study is paired through common random
numbers. Behavioral channels (anchor, AR smoothness, noise) are drawn
independently of competence.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._keys import keyed_rng, keyed_uniforms
from .skilllib import (
    DEFAULT_PHASES,
    CompositionSpec,
    EcmRef,
    LibraryError,
    PhaseId,
    SkillLibrary,
    VersionId,
    make_phases,
)

DEFAULT_VERSIONS = ("42", "7", "123", "2024")
# reach-dominant blend used by every preset
DEFAULT_WEIGHTS = (0.9, 0.033, 0.033, 0.034)

# T6 atomic probe, successes out of 30 (rows: reach, grasp, lift, place)
_T6_ATOMIC_COUNTS = {
    "reach": (2, 0, 8, 26),
    "grasp": (1, 3, 0, 0),
    "lift": (4, 0, 0, 0),
    "place": (7, 6, 0, 5),
}

PRESETS = ("dominant", "saturated", "degenerate")


@dataclass(frozen=True)
class EcmProfile:
    theta: float
    action_anchor: tuple[float, ...]
    smoothness_rho: float = 0.0
    noise_scale: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not 0.0 <= self.smoothness_rho < 1.0:
            raise ValueError(f"smoothness_rho must lie in [0, 1), got {self.smoothness_rho}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")


@dataclass(frozen=True)
class WorldConfig:
    K: int
    phase_weights: tuple[float, ...]
    profiles: Mapping[tuple[int, VersionId], EcmProfile] = field(repr=False)
    versions: tuple[VersionId, ...] = DEFAULT_VERSIONS
    phase_names: tuple[str, ...] = DEFAULT_PHASES
    episode_length: int = 30
    d_a: int = 4
    d_s: int = 6
    base_seed: int = 0
    task: str = "sim"
    reward_noise: float = 0.01

    def __post_init__(self):
        if len(self.phase_names) != self.K or len(self.phase_weights) != self.K:
            raise ValueError("phase_names and phase_weights must both have length K")
        if any(w < 0 for w in self.phase_weights):
            raise ValueError("phase weights must be nonnegative")
        if not math.isclose(sum(self.phase_weights), 1.0, abs_tol=1e-9):
            raise ValueError(f"phase weights must sum to 1, got {sum(self.phase_weights)}")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        for (k, v), prof in self.profiles.items():
            if len(prof.action_anchor) != self.d_a:
                raise ValueError(f"anchor of {v}/{self.phase_names[k]} has dim {len(prof.action_anchor)}, expected {self.d_a}")
        # completeness is enforced by SkillLibrary
        self.library  # noqa: B018

    @property
    def phases(self) -> tuple[PhaseId, ...]:
        return make_phases(self.phase_names)

    @property
    def library(self) -> SkillLibrary:
        return SkillLibrary(self.task, self.phases, tuple(self.versions), self.profiles)

    def profile(self, ecm: EcmRef) -> EcmProfile:
        try:
            return self.profiles[(ecm.phase.index, ecm.version)]
        except KeyError:
            raise LibraryError(f"no profile for ECM {ecm}") from None

    def with_seed(self, base_seed: int) -> "WorldConfig":
        """Same profiles, new episode pool."""
        return replace(self, base_seed=base_seed)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "task": self.task,
            "K": self.K,
            "phase_names": list(self.phase_names),
            "versions": list(self.versions),
            "phase_weights": list(self.phase_weights),
            "episode_length": self.episode_length,
            "d_a": self.d_a,
            "d_s": self.d_s,
            "base_seed": self.base_seed,
            "reward_noise": self.reward_noise,
        }
        d["profiles"] = {
            name: {
                v: {
                    "theta": p.theta,
                    "action_anchor": list(p.action_anchor),
                    "smoothness_rho": p.smoothness_rho,
                    "noise_scale": p.noise_scale,
                }
                for v in self.versions
                for p in [self.profiles[(k, v)]]
            }
            for k, name in enumerate(self.phase_names)
        }
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "WorldConfig":
        names = tuple(d["phase_names"])
        profiles = {}
        for k, name in enumerate(names):
            for v, p in d["profiles"][name].items():
                profiles[(k, str(v))] = EcmProfile(
                    theta=float(p["theta"]),
                    action_anchor=tuple(float(x) for x in p["action_anchor"]),
                    smoothness_rho=float(p.get("smoothness_rho", 0.0)),
                    noise_scale=float(p.get("noise_scale", 0.0)),
                )
        return cls(
            K=int(d["K"]),
            phase_weights=tuple(float(w) for w in d["phase_weights"]),
            profiles=profiles,
            versions=tuple(str(v) for v in d["versions"]),
            phase_names=names,
            episode_length=int(d.get("episode_length", 30)),
            d_a=int(d.get("d_a", 4)),
            d_s=int(d.get("d_s", 6)),
            base_seed=int(d.get("base_seed", 0)),
            task=str(d.get("task", "sim")),
            reward_noise=float(d.get("reward_noise", 0.01)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WorldConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class EpisodeOutcome:
    episode_index: int
    success: bool
    reward: float | None = None


@dataclass(frozen=True)
class CellResult:
    """Outcomes of one cell over the paired pool.

    ``outcomes`` is ``None`` when only counts are known (fixture replay).
    """

    cell: str
    successes: int
    n: int
    outcomes: tuple[EpisodeOutcome, ...] | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.n:
            raise ValueError(f"cell {self.cell}: successes {self.successes} outside [0, {self.n}]")

    @property
    def rate(self) -> float:
        return self.successes / self.n

    @property
    def pct(self) -> float:
        return 100.0 * self.successes / self.n

    def indicators(self) -> np.ndarray:
        if self.outcomes is not None:
            return np.array([o.success for o in self.outcomes], dtype=float)
        return np.r_[np.ones(self.successes), np.zeros(self.n - self.successes)]


@dataclass(frozen=True)
class TrajectoryLog:
    actions: np.ndarray  # (T, d_a)
    states: np.ndarray  # (T + 1, d_s)

    def __post_init__(self):
        if self.actions.ndim != 2 or self.states.ndim != 2:
            raise ValueError("actions and states must be 2-D arrays")
        if self.states.shape[0] != self.actions.shape[0] + 1:
            raise ValueError("states must have exactly one more row than actions")

    @property
    def end_state(self) -> np.ndarray:
        return self.states[-1]


def episode_success_prob(config: WorldConfig, comp: CompositionSpec) -> float:
    if comp.K != config.K:
        raise ValueError(f"composition has {comp.K} phases, world has {config.K}")
    p = sum(w * config.profile(ecm).theta for w, ecm in zip(config.phase_weights, comp.assignment))
    return min(1.0, max(0.0, p))


def atomic_success_prob(config: WorldConfig, ecm: EcmRef) -> float:
    return config.profile(ecm).theta


def episode_uniforms(config: WorldConfig, n: int, stream=None) -> np.ndarray:
    """Shared per-episode uniforms; ``stream=None`` is the common paired pool."""
    prefix = (config.base_seed, "episode") if stream is None else (config.base_seed, "episode", stream)
    return keyed_uniforms(prefix, n)


def _outcomes(config: WorldConfig, prob: float, n: int, stream) -> tuple[EpisodeOutcome, ...]:
    u = episode_uniforms(config, n, stream)
    out = []
    for i in range(n):
        z = keyed_rng(config.base_seed, "reward", "pool" if stream is None else stream, i).standard_normal()
        out.append(EpisodeOutcome(i, bool(u[i] < prob), prob + config.reward_noise * float(z)))
    return tuple(out)


def _cell(label: str, outcomes: tuple[EpisodeOutcome, ...]) -> CellResult:
    return CellResult(label, sum(o.success for o in outcomes), len(outcomes), outcomes)


def run_paired_cell(config: WorldConfig, comp: CompositionSpec, N: int, stream=None, label: str | None = None) -> CellResult:
    if N < 1:
        raise ValueError("N must be >= 1")
    prob = episode_success_prob(config, comp)
    return _cell(label or str(comp), _outcomes(config, prob, N, stream))


def run_atomic_cell(config: WorldConfig, ecm: EcmRef, N: int, stream=None) -> CellResult:
    if N < 1:
        raise ValueError("N must be >= 1")
    return _cell(f"atomic {ecm}", _outcomes(config, atomic_success_prob(config, ecm), N, stream))


def mixing_map(config: WorldConfig) -> np.ndarray:
    """Fixed action-to-state map ``M`` with shape (d_s, d_a)."""
    return keyed_rng(config.base_seed, "mixing").standard_normal((config.d_s, config.d_a)) / math.sqrt(config.d_a)


def initial_state(config: WorldConfig, episode_index: int) -> np.ndarray:
    return keyed_rng(config.base_seed, "init-state", episode_index).standard_normal(config.d_s)


def generate_trajectory(config: WorldConfig, ecm: EcmRef, episode_index: int) -> TrajectoryLog:
    """AR(1) action stream around the ECM's anchor, integrated through ``M``.

    ``a_0 = anchor + noise * eps_0`` and
    ``a_t = rho * a_{t-1} + (1 - rho) * anchor + noise * eps_t``;
    states follow ``s_{t+1} = s_t + M a_t`` from a paired initial state.
    """
    prof = config.profile(ecm)
    T = config.episode_length
    anchor = np.asarray(prof.action_anchor, dtype=float)
    eps = keyed_rng(config.base_seed, "traj", ecm.phase.index, ecm.version, episode_index).standard_normal((T, config.d_a))
    rho, sigma = prof.smoothness_rho, prof.noise_scale
    actions = np.empty((T, config.d_a))
    actions[0] = anchor + sigma * eps[0]
    for t in range(1, T):
        actions[t] = rho * actions[t - 1] + (1.0 - rho) * anchor + sigma * eps[t]
    states = np.empty((T + 1, config.d_s))
    states[0] = initial_state(config, episode_index)
    states[1:] = states[0] + np.cumsum(actions @ mixing_map(config).T, axis=0)
    return TrajectoryLog(actions, states)


def _behavior(base_seed: int, k: int, v: VersionId, d_a: int) -> tuple[tuple[float, ...], float, float]:
    rng = keyed_rng(base_seed, "anchor", k, v)
    anchor = tuple(float(x) for x in rng.standard_normal(d_a))
    rho = float(rng.uniform(0.0, 0.8))
    noise = float(rng.uniform(0.1, 0.4))
    return anchor, rho, noise


def build_world(
    thetas: Mapping[str, Sequence[float]],
    *,
    versions: Sequence[VersionId] = DEFAULT_VERSIONS,
    phase_weights: Sequence[float] = DEFAULT_WEIGHTS,
    base_seed: int = 0,
    task: str = "sim",
    episode_length: int = 30,
    d_a: int = 4,
    d_s: int = 6,
) -> WorldConfig:
    """World with the given per-phase thetas (one per version) and keyed behavior."""
    names = tuple(thetas)
    profiles = {}
    for k, name in enumerate(names):
        if len(thetas[name]) != len(versions):
            raise ValueError(f"phase {name}: {len(thetas[name])} thetas for {len(versions)} versions")
        for v, th in zip(versions, thetas[name]):
            anchor, rho, noise = _behavior(base_seed, k, v, d_a)
            profiles[(k, v)] = EcmProfile(float(th), anchor, rho, noise)
    return WorldConfig(
        K=len(names),
        phase_weights=tuple(phase_weights),
        profiles=profiles,
        versions=tuple(versions),
        phase_names=names,
        episode_length=episode_length,
        d_a=d_a,
        d_s=d_s,
        base_seed=base_seed,
        task=task,
    )


def scenario_preset(name: str, base_seed: int = 0, **kwargs) -> WorldConfig:
    """``dominant`` (T6 atomic thetas), ``saturated`` (all 1) or ``degenerate`` (all 0)."""
    if name == "dominant":
        thetas = {ph: tuple(c / 30 for c in counts) for ph, counts in _T6_ATOMIC_COUNTS.items()}
    elif name == "saturated":
        thetas = {ph: (1.0,) * len(DEFAULT_VERSIONS) for ph in DEFAULT_PHASES}
    elif name == "degenerate":
        thetas = {ph: (0.0,) * len(DEFAULT_VERSIONS) for ph in DEFAULT_PHASES}
    else:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(PRESETS)}")
    return build_world(thetas, base_seed=base_seed, task=name, **kwargs)
