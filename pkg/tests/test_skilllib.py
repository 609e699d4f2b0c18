import pytest
from hypothesis import given, strategies as st

from skillgov.skilllib import (
    CompositionSpec,
    EcmRef,
    LibraryError,
    SkillLibrary,
    SwapSet,
    UpdateEvent,
    compose,
    enumerate_swapsets,
    make_phases,
    uniform_composition,
    update_events,
)

VERSIONS = ("42", "7", "123", "2024")


def lib(K=4, versions=VERSIONS):
    phases = make_phases([f"p{k}" for k in range(K)])
    return SkillLibrary("t", phases, versions, {(p.index, v): None for p in phases for v in versions})


@pytest.mark.parametrize("K", range(0, 9))
def test_enumerate_swapsets_size_and_uniqueness(K):
    s = enumerate_swapsets(K)
    assert len(s) == 2**K
    assert len({x.mask for x in s}) == 2**K
    assert [x.mask for x in s] == sorted(x.mask for x in s)


@given(K=st.integers(1, 8), data=st.data())
def test_compose_complement_symmetry(K, data):
    L = lib(K)
    p, a = data.draw(st.sampled_from(VERSIONS)), data.draw(st.sampled_from(VERSIONS))
    sigma = SwapSet(data.draw(st.integers(0, 2**K - 1)))
    assert compose(L, p, a, sigma) == compose(L, a, p, sigma.complement(K))


@given(K=st.integers(1, 8), data=st.data())
def test_compose_empty_and_full(K, data):
    L = lib(K)
    p, a = data.draw(st.sampled_from(VERSIONS)), data.draw(st.sampled_from(VERSIONS))
    assert compose(L, p, a, SwapSet(0)) == uniform_composition(L, p)
    assert compose(L, p, a, SwapSet.full(K)) == compose(L, a, p, SwapSet(0))


@given(K=st.integers(1, 8), mask=st.integers(0, 255))
def test_compose_takes_alt_exactly_on_sigma(K, mask):
    L = lib(K)
    mask &= 2**K - 1
    c = compose(L, "42", "2024", SwapSet(mask))
    assert [v == "2024" for v in c.versions()] == [bool(mask >> k & 1) for k in range(K)]


def test_compose_rejects_oversized_mask_and_unknown_version():
    L = lib(3)
    with pytest.raises(ValueError):
        compose(L, "42", "7", SwapSet(0b1000))
    with pytest.raises(LibraryError):
        compose(L, "42", "nope", SwapSet(0))


def test_k1_library():
    L = lib(1)
    assert enumerate_swapsets(1) == [SwapSet(0), SwapSet(1)]
    assert compose(L, "42", "7", SwapSet(1)).versions() == ("7",)


def test_incomplete_library_grid():
    phases = make_phases(["a", "b"])
    cells = {(0, "x"): 1, (1, "x"): 1, (0, "y"): 1}
    with pytest.raises(LibraryError, match="b/y"):
        SkillLibrary("t", phases, ("x", "y"), cells)


def test_duplicate_versions_rejected():
    phases = make_phases(["a"])
    with pytest.raises(ValueError):
        SkillLibrary("t", phases, ("x", "x"), {(0, "x"): 1})


def test_library_lookup():
    L = lib(4)
    assert L.phase("p2").index == 2
    assert L.phase(3).name == "p3"
    with pytest.raises(LibraryError):
        L.phase("zz")
    assert str(L.ecm("p0", "2024")) == "2024-p0"


def test_composition_spec_checks_phase_order():
    ph = make_phases(["a", "b"])
    with pytest.raises(ValueError):
        CompositionSpec((EcmRef(ph[1], "x"), EcmRef(ph[0], "x")))


def test_update_events_count_order_and_ids():
    phases = make_phases()
    ev = update_events(VERSIONS, phases)
    assert len(ev) == 48
    assert len({e.event_id for e in ev}) == 48
    assert [e.phase.name for e in ev[:12]] == ["reach"] * 12
    assert ev[0].event_id == "reach:42->7"
    with pytest.raises(ValueError):
        UpdateEvent("42", "42", phases[0])


def test_swapset_helpers():
    ph = make_phases()
    s = SwapSet.of([ph[0], 2])
    assert s.mask == 0b101
    assert ph[0] in s and ph[1] not in s
    assert s.indices(4) == (0, 2)
    assert s.label(ph) == "reach+lift"
    assert SwapSet(0).label(ph) == "none"
    with pytest.raises(ValueError):
        SwapSet(-1)
