"""Atomic and composition probes, and the matrix-level studies built on them.

A runner answers probes either from the simulator or from a fixture of
published counts. Atomic probe results are cached per ECM so that repeated
use across update events issues no extra episodes.
"""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .fixtures import FixtureError
from .simworld import CellResult, WorldConfig, run_atomic_cell, run_paired_cell
from .skilllib import (
    CompositionSpec,
    EcmRef,
    PhaseId,
    SkillLibrary,
    SwapSet,
    UpdateEvent,
    VersionId,
    compose,
    enumerate_swapsets,
)

if TYPE_CHECKING:
    from .fixtures import FixtureSet

CSV_FIELDS = ("primary", "swap", "successes", "n", "rate")


@dataclass(frozen=True)
class ProbeResult:
    subject: EcmRef | CompositionSpec | str
    successes: int
    n: int

    def __post_init__(self):
        if not 0 <= self.successes <= self.n:
            raise ValueError(f"successes {self.successes} outside [0, {self.n}]")

    @property
    def rate(self) -> float:
        return self.successes / self.n

    @property
    def pct(self) -> float:
        return 100.0 * self.successes / self.n


class ProbeRunner:
    """Common probe surface; subclasses supply the episode source."""

    library: SkillLibrary

    def __init__(self):
        self._atomic_cache: dict[tuple[EcmRef, int], ProbeResult] = {}
        self._lock = threading.Lock()
        self.amortized_episodes = 0

    def phase(self, key) -> PhaseId:
        return self.library.phase(key)

    def atomic(self, ecm: EcmRef, N: int) -> ProbeResult:
        key = (ecm, N)
        with self._lock:
            hit = self._atomic_cache.get(key)
        if hit is not None:
            return hit
        cell = self._run_atomic(ecm, N)
        res = ProbeResult(ecm, cell.successes, cell.n)
        with self._lock:
            if key not in self._atomic_cache:
                self.amortized_episodes += cell.n
            self._atomic_cache[key] = res
        return res

    def _run_atomic(self, ecm: EcmRef, N: int) -> CellResult:
        raise NotImplementedError

    def swap_cell(self, phase, primary: VersionId, swap: VersionId, N: int) -> CellResult:
        """Single-phase swap cell; ``swap == primary`` is the within-version baseline."""
        raise NotImplementedError

    def composition(self, comp: CompositionSpec, N: int) -> CellResult:
        raise NotImplementedError

    def revalidate(self, event: UpdateEvent, N: int) -> tuple[CellResult, CellResult]:
        """Composition probes of (post-update, pre-update) for one event."""
        raise NotImplementedError


class SimRunner(ProbeRunner):
    """Simulator-backed probes.

    Study cells share the common episode pool. With ``fresh_revalidation``
    each update decision draws its own paired pool (keyed by event id), as a
    deployed revalidation run would; otherwise decisions reuse the study pool.
    """

    def __init__(self, config: WorldConfig, fresh_revalidation: bool = True):
        super().__init__()
        self.config = config
        self.library = config.library
        self.fresh_revalidation = fresh_revalidation

    def _run_atomic(self, ecm, N):
        return run_atomic_cell(self.config, ecm, N)

    def swap_cell(self, phase, primary, swap, N):
        ph = self.phase(phase)
        sigma = SwapSet(0) if swap == primary else SwapSet.of([ph])
        comp = compose(self.library, primary, swap, sigma)
        return run_paired_cell(self.config, comp, N, label=f"{ph.name}:{primary}<-{swap}")

    def composition(self, comp, N):
        return run_paired_cell(self.config, comp, N)

    def revalidate(self, event, N):
        lib = self.library
        new = compose(lib, event.primary, event.candidate, SwapSet.of([event.phase]))
        base = compose(lib, event.primary, event.primary, SwapSet(0))
        stream = ("reval", event.event_id) if self.fresh_revalidation else None
        return (
            run_paired_cell(self.config, new, N, stream=stream, label=f"{event.event_id} new"),
            run_paired_cell(self.config, base, N, stream=stream, label=f"{event.event_id} base"),
        )


class FixtureRunner(ProbeRunner):
    """Probes answered from published counts; ``N`` must equal the fixture's n."""

    def __init__(self, fixture: "FixtureSet"):
        super().__init__()
        self.fixture = fixture
        self.library = fixture.library

    def _check_n(self, N: int) -> None:
        if N != self.fixture.n:
            raise FixtureError(f"fixture {self.fixture.task!r} holds N={self.fixture.n} episodes per cell, asked for N={N}")

    def _run_atomic(self, ecm, N):
        self._check_n(N)
        s = self.fixture.atomic_count(ecm.phase.name, ecm.version)
        return CellResult(f"atomic {ecm}", s, N)

    def swap_cell(self, phase, primary, swap, N):
        self._check_n(N)
        ph = self.phase(phase)
        self.library.check_version(primary)
        self.library.check_version(swap)
        s = self.fixture.paired_count(ph.name, primary, swap)
        return CellResult(f"{ph.name}:{primary}<-{swap}", s, N)

    def composition(self, comp, N):
        # only single-phase swaps were published
        versions = comp.versions()
        distinct = set(versions)
        if len(distinct) == 2:
            counts = {v: versions.count(v) for v in distinct}
            alt = next((v for v, c in counts.items() if c == 1), None)
            if alt is not None:
                primary = next(v for v in distinct if v != alt)
                return self.swap_cell(versions.index(alt), primary, alt, N)
        raise FixtureError(f"composition {comp} is not a published single-phase swap cell")

    def revalidate(self, event, N):
        return (
            self.swap_cell(event.phase, event.primary, event.candidate, N),
            self.swap_cell(event.phase, event.primary, event.primary, N),
        )


def atomic_probe(runner: ProbeRunner, ecm: EcmRef, N: int = 30) -> ProbeResult:
    return runner.atomic(ecm, N)


@dataclass(frozen=True)
class SwapMatrix:
    """Rows are primary versions, columns the swapped-in version."""

    phase: PhaseId
    versions: tuple[VersionId, ...]
    cells: tuple[tuple[CellResult, ...], ...]

    def __post_init__(self):
        S = len(self.versions)
        if len(self.cells) != S or any(len(r) != S for r in self.cells):
            raise ValueError("swap matrix must be square in the version count")

    def cell(self, primary: VersionId, swap: VersionId) -> CellResult:
        return self.cells[self.versions.index(primary)][self.versions.index(swap)]

    def pct_grid(self) -> list[list[float]]:
        return [[c.pct for c in row] for row in self.cells]

    def diagonal(self) -> list[CellResult]:
        return [self.cells[i][i] for i in range(len(self.versions))]

    def offdiagonal(self) -> list[CellResult]:
        S = len(self.versions)
        return [self.cells[i][j] for i in range(S) for j in range(S) if i != j]

    def baseline_pairs(self) -> tuple[list[float], list[float]]:
        """(off-diagonal rate, same-row diagonal rate) for every off-diagonal cell."""
        S = len(self.versions)
        x = [self.cells[i][j].pct for i in range(S) for j in range(S) if i != j]
        y = [self.cells[i][i].pct for i in range(S) for j in range(S) if i != j]
        return x, y

    def rows(self) -> list[dict]:
        return [
            {"primary": p, "swap": a, "successes": c.successes, "n": c.n, "rate": f"{c.pct:.1f}"}
            for p, row in zip(self.versions, self.cells)
            for a, c in zip(self.versions, row)
        ]


def paired_swap_matrix(runner: ProbeRunner, phase, versions: Sequence[VersionId] | None = None, N: int = 30) -> SwapMatrix:
    ph = runner.phase(phase)
    versions = tuple(versions or runner.library.versions)
    if len(versions) < 2:
        raise ValueError("a swap matrix needs at least two versions")
    cells = tuple(tuple(runner.swap_cell(ph, p, a, N) for a in versions) for p in versions)
    return SwapMatrix(ph, versions, cells)


@dataclass(frozen=True)
class SubsetPartition:
    primary: VersionId
    alt: VersionId
    focal: PhaseId
    group_in: float
    group_out: float
    cells: tuple[tuple[SwapSet, CellResult], ...] = field(repr=False)

    @property
    def delta_pp(self) -> float:
        return self.group_in - self.group_out

    def rows(self, phases: Sequence[PhaseId]) -> list[dict]:
        return [
            {"primary": self.primary, "swap": f"{self.alt}:{s.label(phases)}", "successes": c.successes, "n": c.n, "rate": f"{c.pct:.1f}"}
            for s, c in self.cells
        ]


def subset_swap_analysis(runner: ProbeRunner, p: VersionId, a: VersionId, focal_phase, N: int = 30) -> SubsetPartition:
    """Run all 2^K swap-sets of (p, a) and split by membership of the focal phase."""
    lib = runner.library
    focal = lib.phase(focal_phase)
    cells = tuple((s, runner.composition(compose(lib, p, a, s), N)) for s in enumerate_swapsets(lib.K))
    inside = [c.pct for s, c in cells if focal in s]
    outside = [c.pct for s, c in cells if focal not in s]
    return SubsetPartition(p, a, focal, sum(inside) / len(inside), sum(outside) / len(outside), cells)


@dataclass(frozen=True)
class ColumnSummary:
    means: tuple[float, ...]
    spread: float


def column_means(matrix: SwapMatrix, include_diagonal: bool = True) -> ColumnSummary:
    S = len(matrix.versions)
    means = []
    for j in range(S):
        col = [matrix.cells[i][j] for i in range(S) if include_diagonal or i != j]
        means.append(100.0 * sum(c.successes for c in col) / sum(c.n for c in col))
    return ColumnSummary(tuple(means), max(means) - min(means))


def write_csv(path: str | Path, rows: Iterable[dict], fields: Sequence[str] = CSV_FIELDS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
