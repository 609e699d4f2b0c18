"""Published count matrices as a versioned dataset.

Fixture files are JSON with top-level keys ``task``, ``n``, ``atomic``,
``paired`` and ``references``::

    {
      "task": "T6_TwoArmPegInHole",
      "n": 30,
      "atomic": {"reach": {"42": 2, "7": 0, ...}, ...},
      "paired": {"reach": {"42": {"42": 4, "7": 0, ...}, ...}, ...},
      "references": {...}
    }

``atomic`` maps phase -> version -> successes; ``paired`` maps
phase -> primary -> swapped-in version -> successes, the diagonal being the
within-version baseline. Phase and version order are taken from ``atomic``.
``references`` holds published values used for comparison; the optional
``atomic_pct`` / ``paired_pct`` entries mirror the count grids with the
printed percentages and are checked against ``count / n`` at load.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .skilllib import DEFAULT_PHASES, SkillLibrary, VersionId, make_phases

SHIPPED = {"t6": "t6.json", "t1": "t1.json"}


class FixtureError(ValueError):
    """Fixture file fails schema or consistency checks."""


@dataclass(frozen=True)
class FixtureSet:
    task: str
    n: int
    atomic: Mapping[str, Mapping[VersionId, int]]
    paired: Mapping[str, Mapping[VersionId, Mapping[VersionId, int]]]
    references: Mapping[str, Any] = field(default_factory=dict)

    @property
    def phase_names(self) -> tuple[str, ...]:
        return tuple(self.atomic)

    @property
    def versions(self) -> tuple[VersionId, ...]:
        return tuple(next(iter(self.atomic.values())))

    @property
    def library(self) -> SkillLibrary:
        phases = make_phases(self.phase_names)
        cells = {(p.index, v): self.atomic[p.name][v] for p in phases for v in self.versions}
        return SkillLibrary(self.task, phases, self.versions, cells)

    def atomic_count(self, phase: str, version: VersionId) -> int:
        try:
            return self.atomic[phase][version]
        except KeyError:
            raise FixtureError(f"fixture {self.task!r} has no atomic cell {phase}/{version}") from None

    def paired_count(self, phase: str, primary: VersionId, swap: VersionId) -> int:
        try:
            return self.paired[phase][primary][swap]
        except KeyError:
            raise FixtureError(
                f"fixture {self.task!r} has no paired cell {phase}: primary={primary}, swap={swap}"
            ) from None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "n": self.n,
            "atomic": {ph: dict(row) for ph, row in self.atomic.items()},
            "paired": {ph: {p: dict(r) for p, r in m.items()} for ph, m in self.paired.items()},
            "references": _plain(self.references),
        }


def _plain(obj):
    if isinstance(obj, Mapping):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _count(value, where: str, n: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FixtureError(f"{where}: count must be an integer, got {value!r}")
    if not 0 <= value <= n:
        raise FixtureError(f"{where}: count {value} outside [0, {n}]")
    return value


def _check_pct(count: int, n: int, pct, where: str) -> None:
    if abs(100.0 * count / n - float(pct)) > 0.05 + 1e-9:
        raise FixtureError(f"{where}: {count}/{n} = {100.0 * count / n:.2f}% does not match printed {pct}%")


def validate(raw: Any) -> FixtureSet:
    if not isinstance(raw, Mapping) or not raw:
        raise FixtureError("fixture must be a non-empty JSON object")
    for key in ("task", "n", "atomic", "paired"):
        if key not in raw:
            raise FixtureError(f"fixture is missing top-level key {key!r}")
    n = raw["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise FixtureError(f"n must be a positive integer, got {n!r}")
    atomic_raw, paired_raw = raw["atomic"], raw["paired"]
    if not isinstance(atomic_raw, Mapping) or not atomic_raw:
        raise FixtureError("atomic must be a non-empty object")
    phases = list(atomic_raw)
    versions = list(next(iter(atomic_raw.values())) or {})
    if len(versions) < 2:
        raise FixtureError("fixture needs at least two versions")

    atomic: dict[str, dict[str, int]] = {}
    for ph in phases:
        row = atomic_raw[ph]
        if not isinstance(row, Mapping):
            raise FixtureError(f"atomic[{ph}] must be an object")
        atomic[ph] = {}
        for v in versions:
            if v not in row:
                raise FixtureError(f"missing atomic cell {ph}/{v}")
            atomic[ph][v] = _count(row[v], f"atomic {ph}/{v}", n)
        extra = set(row) - set(versions)
        if extra:
            raise FixtureError(f"atomic[{ph}] has unknown versions {sorted(extra)}")

    paired: dict[str, dict[str, dict[str, int]]] = {}
    if not isinstance(paired_raw, Mapping):
        raise FixtureError("paired must be an object")
    for ph, mat in paired_raw.items():
        if ph not in atomic:
            raise FixtureError(f"paired matrix for unknown phase {ph!r}")
        paired[ph] = {}
        for p in versions:
            if p not in mat:
                raise FixtureError(f"missing paired row {ph}: primary={p}")
            paired[ph][p] = {}
            for a in versions:
                if a not in mat[p]:
                    raise FixtureError(f"missing paired cell {ph}: primary={p}, swap={a}")
                paired[ph][p][a] = _count(mat[p][a], f"paired {ph}: primary={p}, swap={a}", n)

    refs = raw.get("references", {}) or {}
    if not isinstance(refs, Mapping):
        raise FixtureError("references must be an object")
    for ph, row in refs.get("atomic_pct", {}).items():
        for v, pct in row.items():
            if ph not in atomic or v not in atomic[ph]:
                raise FixtureError(f"atomic_pct names unknown cell {ph}/{v}")
            _check_pct(atomic[ph][v], n, pct, f"atomic {ph}/{v}")
    for ph, mat in refs.get("paired_pct", {}).items():
        for p, row in mat.items():
            for a, pct in row.items():
                if ph not in paired or p not in paired[ph] or a not in paired[ph][p]:
                    raise FixtureError(f"paired_pct names unknown cell {ph}: primary={p}, swap={a}")
                _check_pct(paired[ph][p][a], n, pct, f"paired {ph}: primary={p}, swap={a}")

    fs = FixtureSet(str(raw["task"]), n, atomic, paired, refs)
    fs.library  # grid completeness
    return fs


def resolve(name_or_path: str | Path) -> Path | None:
    """Shipped fixture name (``t6``, ``t1``) or a filesystem path."""
    p = Path(name_or_path)
    if p.exists():
        return p
    key = str(name_or_path).lower()
    if key in SHIPPED:
        return Path(str(resources.files("skillgov") / "data" / SHIPPED[key]))
    return None


def load_fixture(path: str | Path) -> FixtureSet:
    resolved = resolve(path)
    if resolved is None:
        raise FixtureError(f"fixture not found: {path}")
    text = resolved.read_text()
    if not text.strip():
        raise FixtureError(f"{resolved}: empty fixture file")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"{resolved}: not valid JSON ({exc})") from None
    return validate(raw)


def dumps_fixture(fs: FixtureSet) -> str:
    return json.dumps(fs.to_dict(), indent=2) + "\n"


def saturated_fixture(n: int = 30, versions=("42", "7", "123", "2024"), phases=DEFAULT_PHASES) -> FixtureSet:
    """Uniform 100% grid: every atomic and paired cell is ``n / n``."""
    atomic = {ph: {v: n for v in versions} for ph in phases}
    paired = {ph: {p: {a: n for a in versions} for p in versions} for ph in phases}
    return FixtureSet("T1_Pick", n, atomic, paired, {})
