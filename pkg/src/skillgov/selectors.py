"""Update selectors, the oracle, cost accounting and the oracle-match benchmark.

All rates are compared in percentage points. Fixture-backed rates are exact
fractions, so boundary cases (``delta == -tau``, ``|delta| == m``) resolve
without float drift; acceptance at the boundary is *accept*.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .probes import ProbeRunner
from .simworld import WorldConfig, episode_success_prob, run_paired_cell
from .skilllib import SwapSet, UpdateEvent, compose
from .stats import CiInterval, DisagreementTable, bootstrap_ci, cluster_permutation, mcnemar_exact

KINDS = ("Naive", "Freeze", "AtomicOnly", "FullReval", "Hybrid")


class SelectorError(RuntimeError):
    def __init__(self, event: UpdateEvent, cause: Exception):
        super().__init__(f"{event.event_id}: {cause}")
        self.event = event


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class SelectorSpec:
    kind: str
    margin: float | None = None
    tau: float = 5.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown selector kind {self.kind!r}")
        if self.kind == "Hybrid":
            if self.margin is None or self.margin < 0:
                raise ValueError("Hybrid needs a margin m >= 0")
        elif self.margin is not None:
            raise ValueError(f"{self.kind} takes no margin")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")

    @property
    def name(self) -> str:
        if self.kind == "Hybrid":
            m = self.margin
            return f"Hybrid(m={int(m) if float(m).is_integer() else m})"
        return self.kind


def default_specs(margins: Sequence[float] = (10, 20, 30), tau: float = 5.0) -> list[SelectorSpec]:
    base = [SelectorSpec(k, tau=tau) for k in ("Naive", "Freeze", "AtomicOnly", "FullReval")]
    return base + [SelectorSpec("Hybrid", m, tau) for m in margins]


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    episodes_spent: int
    branch: str  # atomic | composition | constant | oracle

    @property
    def accept(self) -> bool:
        return self.verdict is Verdict.ACCEPT


def _num(x) -> Fraction:
    # str() keeps user-facing decimals such as tau=0.1 exact
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def _pct(successes: int, n: int) -> Fraction:
    return Fraction(100 * successes, n)


def _verdict(ok: bool) -> Verdict:
    return Verdict.ACCEPT if ok else Verdict.REJECT


# -- truth sources -----------------------------------------------------

class FixtureTruth:
    """True rates are the published paired counts."""

    def __init__(self, fixture):
        self.fixture = fixture

    def rates(self, event: UpdateEvent) -> tuple[Fraction, Fraction]:
        f, ph = self.fixture, event.phase.name
        return (
            _pct(f.paired_count(ph, event.primary, event.candidate), f.n),
            _pct(f.paired_count(ph, event.primary, event.primary), f.n),
        )


class SimTruth:
    """Analytic truth of the simulator.

    ``mode="success"`` uses the exact success probability (the N -> infinity
    rate); ``mode="reward"`` uses the mean keyed episode reward over
    ``reward_episodes`` paired episodes.
    """

    def __init__(self, config: WorldConfig, mode: str = "success", reward_episodes: int = 1000):
        if mode not in ("success", "reward"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        self.config = config
        self.mode = mode
        self.reward_episodes = reward_episodes

    def _rate(self, comp) -> float:
        if self.mode == "success":
            return 100.0 * episode_success_prob(self.config, comp)
        cell = run_paired_cell(self.config, comp, self.reward_episodes, stream="oracle-reward")
        return 100.0 * float(np.mean([o.reward for o in cell.outcomes]))

    def rates(self, event: UpdateEvent) -> tuple[float, float]:
        lib = self.config.library
        new = compose(lib, event.primary, event.candidate, SwapSet.of([event.phase]))
        base = compose(lib, event.primary, event.primary, SwapSet(0))
        return self._rate(new), self._rate(base)


def oracle_decide(event: UpdateEvent, truth, tau: float = 5.0) -> Decision:
    """Accept iff SR(C') >= SR(C) - tau; the oracle is free."""
    try:
        new, base = truth.rates(event)
    except Exception as exc:
        raise SelectorError(event, exc) from exc
    return Decision(_verdict(_num(new) >= _num(base) - _num(tau)), 0, "oracle")


def atomic_delta(event: UpdateEvent, probes: ProbeRunner, N: int) -> Fraction:
    q_a = probes.atomic(probes.library.ecm(event.phase, event.candidate), N)
    q_p = probes.atomic(probes.library.ecm(event.phase, event.primary), N)
    return _pct(q_a.successes, q_a.n) - _pct(q_p.successes, q_p.n)


def decide(spec: SelectorSpec, event: UpdateEvent, probes: ProbeRunner, N: int = 30) -> Decision:
    tau = _num(spec.tau)
    try:
        if spec.kind == "Naive":
            return Decision(Verdict.ACCEPT, 0, "constant")
        if spec.kind == "Freeze":
            return Decision(Verdict.REJECT, 0, "constant")
        if spec.kind == "AtomicOnly":
            return Decision(_verdict(atomic_delta(event, probes, N) >= -tau), 0, "atomic")
        if spec.kind == "Hybrid":
            d = atomic_delta(event, probes, N)
            if abs(d) >= _num(spec.margin):
                return Decision(_verdict(d >= -tau), 0, "atomic")
        new, base = probes.revalidate(event, N)
        ok = _pct(new.successes, new.n) >= _pct(base.successes, base.n) - tau
        return Decision(_verdict(ok), N, "composition")
    except SelectorError:
        raise
    except Exception as exc:
        raise SelectorError(event, exc) from exc


# -- benchmark -----------------------------------------------------------

@dataclass
class SelectorSummary:
    spec: SelectorSpec
    decisions: list[Decision]
    matches: list[bool]
    ci: CiInterval
    cost_episodes: int
    cost_pct: float

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def match_count(self) -> int:
        return sum(self.matches)

    @property
    def match_pct(self) -> float:
        return 100.0 * self.match_count / len(self.matches)

    @property
    def fallbacks(self) -> int:
        return sum(d.branch == "composition" for d in self.decisions)


@dataclass
class PairComparison:
    a: str
    b: str
    table: DisagreementTable
    mcnemar_p: float
    cluster_keys: list[str]
    cluster_diffs: list[int]
    cluster_p: float

    @property
    def split(self) -> dict[str, int]:
        return {
            "favour_b": sum(d > 0 for d in self.cluster_diffs),
            "tie": sum(d == 0 for d in self.cluster_diffs),
            "favour_a": sum(d < 0 for d in self.cluster_diffs),
        }


@dataclass
class BenchmarkReport:
    events: list[UpdateEvent]
    oracle: list[Decision]
    selectors: list[SelectorSummary]
    pairs: list[PairComparison]
    N: int
    tau: float
    amortized_episodes: int = 0
    meta: dict = field(default_factory=dict)

    def selector(self, name: str) -> SelectorSummary:
        for s in self.selectors:
            if s.name == name:
                return s
        raise KeyError(name)

    def trace_rows(self) -> list[dict]:
        rows = []
        for s in self.selectors:
            for ev, d, o in zip(self.events, s.decisions, self.oracle):
                rows.append({
                    "event_id": ev.event_id,
                    "selector": s.name,
                    "branch": d.branch,
                    "verdict": d.verdict.value,
                    "oracle_verdict": o.verdict.value,
                    "cost": d.episodes_spent,
                })
        return rows

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "tau": self.tau,
            "n_events": len(self.events),
            "amortized_episodes": self.amortized_episodes,
            "meta": self.meta,
            "selectors": [
                {
                    "selector": s.name,
                    "match_count": s.match_count,
                    "match_pct": round(s.match_pct, 1),
                    "ci": [s.ci.lo, s.ci.hi],
                    "cost_episodes": s.cost_episodes,
                    "cost_pct": round(s.cost_pct, 1),
                    "fallbacks": s.fallbacks,
                }
                for s in self.selectors
            ],
            "pairs": [
                {
                    "a": p.a,
                    "b": p.b,
                    "both_correct": p.table.both_correct,
                    "a_only": p.table.a_only,
                    "b_only": p.table.b_only,
                    "neither": p.table.neither,
                    "mcnemar_p": p.mcnemar_p,
                    "cluster_p": p.cluster_p,
                    "cluster_split": p.split,
                }
                for p in self.pairs
            ],
            "trace": self.trace_rows(),
        }


def cluster_key(event: UpdateEvent) -> str:
    return f"{event.phase.name}:{event.candidate}"


def compare_pair(a: SelectorSummary, b: SelectorSummary, events: Sequence[UpdateEvent], B: int, seed: int) -> PairComparison:
    table = DisagreementTable.from_matches(a.matches, b.matches)
    keys: list[str] = []
    diffs: dict[str, int] = {}
    for ev, ma, mb in zip(events, a.matches, b.matches):
        k = cluster_key(ev)
        if k not in diffs:
            keys.append(k)
            diffs[k] = 0
        diffs[k] += int(mb) - int(ma)
    cd = [diffs[k] for k in keys]
    return PairComparison(a.name, b.name, table, mcnemar_exact(table.a_only, table.b_only), keys, cd, cluster_permutation(cd, B, seed))


def benchmark(
    specs: Sequence[SelectorSpec],
    events: Sequence[UpdateEvent],
    truth,
    probes: ProbeRunner,
    seed: int = 0,
    *,
    N: int = 30,
    B: int = 5000,
    tau: float | None = None,
    pairs: Iterable[tuple[str, str]] = (("AtomicOnly", "FullReval"),),
) -> BenchmarkReport:
    """Run every selector on every event and score it against the oracle."""
    events = list(events)
    if not events:
        raise ValueError("benchmark needs at least one event")
    if tau is None:
        tau = specs[0].tau if specs else 5.0
    oracle = [oracle_decide(ev, truth, tau) for ev in events]
    full_cost = N * len(events)
    summaries = []
    for spec in specs:
        decisions = [decide(spec, ev, probes, N) for ev in events]
        matches = [d.verdict is o.verdict for d, o in zip(decisions, oracle)]
        cost = sum(d.episodes_spent for d in decisions)
        ci = bootstrap_ci([float(m) for m in matches], B, 0.95, seed=(seed, spec.name))
        summaries.append(SelectorSummary(spec, decisions, matches, ci, cost, 100.0 * cost / full_cost))
    by_name = {s.name: s for s in summaries}
    comparisons = [
        compare_pair(by_name[a], by_name[b], events, B, seed)
        for a, b in pairs
        if a in by_name and b in by_name
    ]
    return BenchmarkReport(events, oracle, summaries, comparisons, N, float(tau), probes.amortized_episodes)


PARETO_FIELDS = ("selector", "cost_pct", "match_pct", "match_count", "n_events", "cost_episodes", "on_frontier")


def pareto_export(report: BenchmarkReport) -> list[dict]:
    """One row per selector; cost is relative to FullReval (N per event)."""
    pts = [(s.cost_pct, s.match_pct) for s in report.selectors]

    def dominated(i: int) -> bool:
        c, m = pts[i]
        return any((c2 <= c and m2 >= m) and (c2 < c or m2 > m) for j, (c2, m2) in enumerate(pts) if j != i)

    return [
        {
            "selector": s.name,
            "cost_pct": f"{s.cost_pct:.1f}",
            "match_pct": f"{s.match_pct:.1f}",
            "match_count": s.match_count,
            "n_events": len(s.matches),
            "cost_episodes": s.cost_episodes,
            "on_frontier": int(not dominated(i)),
        }
        for i, s in enumerate(report.selectors)
    ]
