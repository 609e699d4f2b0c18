"""Deterministic laboratory for skill-update governance in phase-chained
skill compositions."""

from .skilllib import (
    CompositionSpec,
    EcmRef,
    PhaseId,
    SkillLibrary,
    SwapSet,
    UpdateEvent,
    compose,
    enumerate_swapsets,
    update_events,
)

__version__ = "0.1.0"

__all__ = [
    "CompositionSpec",
    "EcmRef",
    "PhaseId",
    "SkillLibrary",
    "SwapSet",
    "UpdateEvent",
    "compose",
    "enumerate_swapsets",
    "update_events",
]
