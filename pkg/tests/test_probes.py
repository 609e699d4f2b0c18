import csv

import pytest

from skillgov.fixtures import FixtureError
from skillgov.probes import (
    CSV_FIELDS,
    FixtureRunner,
    SimRunner,
    atomic_probe,
    column_means,
    paired_swap_matrix,
    subset_swap_analysis,
    write_csv,
)
from skillgov.skilllib import SwapSet, compose, update_events


def test_atomic_cache_amortizes(dominant):
    r = SimRunner(dominant)
    ecm = dominant.library.ecm("reach", "2024")
    first = atomic_probe(r, ecm, 30)
    assert r.amortized_episodes == 30
    assert atomic_probe(r, ecm, 30) is first
    assert r.amortized_episodes == 30
    atomic_probe(r, dominant.library.ecm("reach", "7"), 30)
    assert r.amortized_episodes == 60


def test_matrix_cells_share_the_episode_pool(dominant):
    m = paired_swap_matrix(SimRunner(dominant), "reach", N=30)
    cells = [c for row in m.cells for c in row]
    wins = [{o.episode_index for o in c.outcomes if o.success} for c in cells]
    for c in cells:
        assert [o.episode_index for o in c.outcomes] == list(range(30))
    # one shared pool makes success sets nested
    for a in wins:
        for b in wins:
            assert a <= b or b <= a


def test_dominant_column_order_matches_theta(dominant):
    m = paired_swap_matrix(SimRunner(dominant), "reach", N=30)
    cs = column_means(m)
    theta = {v: dominant.profile(dominant.library.ecm("reach", v)).theta for v in m.versions}
    by_mean = sorted(m.versions, key=lambda v: cs.means[m.versions.index(v)])
    by_theta = sorted(m.versions, key=theta.get)
    assert by_mean == by_theta


def test_column_means_diagonal_switch(t6):
    m = paired_swap_matrix(FixtureRunner(t6), "reach", N=30)
    with_diag = column_means(m).means
    without = column_means(m, include_diagonal=False).means
    assert with_diag[3] == pytest.approx((60 + 76.7 + 70 + 50) / 4, abs=0.05)
    assert without[3] == pytest.approx((18 + 23 + 21) / 90 * 100)


def test_baseline_pairs(t6):
    m = paired_swap_matrix(FixtureRunner(t6), "grasp", N=30)
    x, y = m.baseline_pairs()
    assert len(x) == len(y) == 12
    assert y[:3] == [m.cells[0][0].pct] * 3


def test_fixture_runner_rejects_other_n(t6):
    r = FixtureRunner(t6)
    with pytest.raises(FixtureError):
        r.swap_cell("reach", "42", "7", 20)
    with pytest.raises(FixtureError):
        atomic_probe(r, t6.library.ecm("reach", "42"), 31)


def test_fixture_runner_composition(t6):
    r = FixtureRunner(t6)
    lib = t6.library
    comp = compose(lib, "42", "2024", SwapSet.of([0]))
    assert r.composition(comp, 30).successes == t6.paired_count("reach", "42", "2024")
    with pytest.raises(FixtureError):
        r.composition(compose(lib, "42", "2024", SwapSet.of([0, 1])), 30)


def test_fixture_revalidate(t6):
    ev = update_events(t6.versions, t6.library.phases)[0]
    new, base = FixtureRunner(t6).revalidate(ev, 30)
    assert new.successes == t6.paired_count("reach", "42", "7")
    assert base.successes == t6.paired_count("reach", "42", "42")


def test_fresh_revalidation_uses_its_own_pool(dominant):
    ev = update_events(dominant.versions, dominant.library.phases)[5]
    fresh = SimRunner(dominant).revalidate(ev, 30)
    shared = SimRunner(dominant, fresh_revalidation=False).revalidate(ev, 30)
    assert fresh == SimRunner(dominant).revalidate(ev, 30)
    assert shared[0].successes == SimRunner(dominant).swap_cell(ev.phase, ev.primary, ev.candidate, 30).successes


def test_subset_swap_partition(dominant):
    part = subset_swap_analysis(SimRunner(dominant), "42", "2024", "reach", 30)
    assert len(part.cells) == 16
    assert sum(part.focal in s for s, _ in part.cells) == 8
    assert part.delta_pp > 50
    rows = part.rows(dominant.library.phases)
    assert rows[0]["swap"] == "2024:none" and rows[-1]["swap"] == "2024:reach+grasp+lift+place"


def test_write_csv_header(tmp_path, t6):
    m = paired_swap_matrix(FixtureRunner(t6), "lift", N=30)
    p = tmp_path / "m.csv"
    write_csv(p, m.rows())
    with open(p) as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 16
    assert rows[0]["rate"] == f"{m.cells[0][0].pct:.1f}"
