"""Domain types for phase-chained skill libraries and the swap-set algebra."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Any, Iterable, Mapping, Sequence

DEFAULT_PHASES = ("reach", "grasp", "lift", "place")

VersionId = str


class LibraryError(KeyError):
    """Unknown phase or version, or an incomplete library grid."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


@dataclass(frozen=True, order=True)
class PhaseId:
    index: int
    name: str

    def __str__(self) -> str:
        return self.name


def make_phases(names: Sequence[str] = DEFAULT_PHASES) -> tuple[PhaseId, ...]:
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate phase names: {list(names)}")
    return tuple(PhaseId(i, n) for i, n in enumerate(names))


@dataclass(frozen=True, order=True)
class EcmRef:
    phase: PhaseId
    version: VersionId

    def __str__(self) -> str:
        return f"{self.version}-{self.phase.name}"


@dataclass(frozen=True)
class SwapSet:
    """Bitmask over phase indices; bit ``k`` set means phase ``k`` is swapped."""

    mask: int

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("swap-set mask must be nonnegative")

    @classmethod
    def of(cls, phases: Iterable[PhaseId | int]) -> "SwapSet":
        mask = 0
        for p in phases:
            mask |= 1 << (p.index if isinstance(p, PhaseId) else int(p))
        return cls(mask)

    @classmethod
    def full(cls, K: int) -> "SwapSet":
        return cls((1 << K) - 1)

    def __contains__(self, phase: PhaseId | int) -> bool:
        k = phase.index if isinstance(phase, PhaseId) else int(phase)
        return bool(self.mask >> k & 1)

    def complement(self, K: int) -> "SwapSet":
        return SwapSet(((1 << K) - 1) & ~self.mask)

    def indices(self, K: int) -> tuple[int, ...]:
        return tuple(k for k in range(K) if self.mask >> k & 1)

    def label(self, phases: Sequence[PhaseId]) -> str:
        names = [p.name for p in phases if p in self]
        return "+".join(names) if names else "none"


@dataclass(frozen=True)
class CompositionSpec:
    assignment: tuple[EcmRef, ...]

    def __post_init__(self):
        for k, ecm in enumerate(self.assignment):
            if ecm.phase.index != k:
                raise ValueError(f"assignment[{k}] is for phase {ecm.phase}, expected index {k}")

    @property
    def K(self) -> int:
        return len(self.assignment)

    def versions(self) -> tuple[VersionId, ...]:
        return tuple(e.version for e in self.assignment)

    def __str__(self) -> str:
        return "(" + ", ".join(str(e) for e in self.assignment) + ")"


@dataclass(frozen=True)
class UpdateEvent:
    primary: VersionId
    candidate: VersionId
    phase: PhaseId

    def __post_init__(self):
        if self.primary == self.candidate:
            raise ValueError("update event needs distinct primary and candidate versions")

    @property
    def event_id(self) -> str:
        return f"{self.phase.name}:{self.primary}->{self.candidate}"


@dataclass(frozen=True)
class SkillLibrary:
    """Complete phase x version grid of ECM backings.

    A backing is whatever the owner attaches to a cell: a simulator
    competence profile or a fixture success count.
    """

    task: str
    phases: tuple[PhaseId, ...]
    versions: tuple[VersionId, ...]
    cells: Mapping[tuple[int, VersionId], Any] = field(repr=False)

    def __post_init__(self):
        if len(self.phases) < 1:
            raise ValueError("a library needs K >= 1 phases")
        if [p.index for p in self.phases] != list(range(len(self.phases))):
            raise ValueError("phase indices must be dense and ordered from 0")
        if len(set(self.versions)) != len(self.versions):
            raise ValueError(f"duplicate versions: {list(self.versions)}")
        missing = [
            f"{p.name}/{v}" for p in self.phases for v in self.versions if (p.index, v) not in self.cells
        ]
        if missing:
            raise LibraryError(f"incomplete library grid, missing: {', '.join(missing)}")

    @property
    def K(self) -> int:
        return len(self.phases)

    def phase(self, key: str | int | PhaseId) -> PhaseId:
        if isinstance(key, PhaseId):
            key = key.index
        for p in self.phases:
            if p.index == key or p.name == key:
                return p
        raise LibraryError(f"unknown phase {key!r} in library {self.task!r}")

    def check_version(self, version: VersionId) -> VersionId:
        if version not in self.versions:
            raise LibraryError(f"unknown version {version!r} in library {self.task!r}")
        return version

    def ecm(self, phase: str | int | PhaseId, version: VersionId) -> EcmRef:
        return EcmRef(self.phase(phase), self.check_version(version))

    def backing(self, ecm: EcmRef) -> Any:
        try:
            return self.cells[(ecm.phase.index, ecm.version)]
        except KeyError:
            raise LibraryError(f"no library cell for ECM {ecm}") from None


def enumerate_swapsets(K: int) -> list[SwapSet]:
    if K < 0:
        raise ValueError("K must be >= 0")
    return [SwapSet(m) for m in range(1 << K)]


def compose(library: SkillLibrary, primary: VersionId, alt: VersionId, sigma: SwapSet) -> CompositionSpec:
    """Phase ``k`` takes ``alt``'s ECM iff bit ``k`` of ``sigma`` is set."""
    library.check_version(primary)
    library.check_version(alt)
    if sigma.mask >> library.K:
        raise ValueError(f"swap-set mask {sigma.mask:#b} exceeds K={library.K}")
    return CompositionSpec(
        tuple(EcmRef(p, alt if p in sigma else primary) for p in library.phases)
    )


def uniform_composition(library: SkillLibrary, version: VersionId) -> CompositionSpec:
    return compose(library, version, version, SwapSet(0))


def update_events(versions: Sequence[VersionId], phases: Sequence[PhaseId]) -> list[UpdateEvent]:
    """All ordered (primary, candidate) pairs for every phase, phase-major."""
    if len(versions) < 2:
        raise ValueError("update events need at least two versions")
    return [
        UpdateEvent(p, a, ph) for ph in phases for p, a in permutations(versions, 2)
    ]
