import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import TABLE_NO_EF1
from groupfair.experiments import (CSV_COLUMNS, PROPERTIES, ExperimentConfig, ExperimentReport,
                                   IndividualInstance, Pairing, PropertyRow, aggregate, bootstrap_ci,
                                   check_implications, emit_report, evaluate_pairing, generate_pairings,
                                   load_dataset, num_pairings, parse_report_csv, report_csv, report_svg,
                                   run_pairing_experiment, save_dataset, synth_spliddit_like)

FAST = ExperimentConfig(limit=4, seed=3, oracle_budget=10 ** 5, resamples=500)


def test_pairing_counts():
    assert len(generate_pairings(4)) == 3 == num_pairings(4)
    assert len(generate_pairings(2)) == 1
    five = generate_pairings(5)
    assert len(five) == 15
    assert all(sum(len(c) == 1 for c in p.cells) == 1 for p in five)
    assert num_pairings(8) == 105 and num_pairings(7) == 105


def test_limit_equal_to_count_gives_everything_once():
    got = generate_pairings(6, limit=15, rng_seed=9)
    assert len(got) == len(set(got)) == 15
    canon = {frozenset(frozenset(c) for c in p.cells) for p in got}
    assert len(canon) == 15


def test_sampling_without_replacement():
    a = generate_pairings(12, limit=50, rng_seed="x")
    assert len(set(a)) == 50
    assert a == generate_pairings(12, limit=50, rng_seed="x")
    assert a != generate_pairings(12, limit=50, rng_seed="y")


def test_pairing_errors():
    with pytest.raises(ValueError):
        generate_pairings(1)
    with pytest.raises(ValueError):
        Pairing(((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        Pairing(((0,), (1,)))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 11), st.integers(1, 30), st.integers(0, 1000))
def test_pairings_are_valid(n, limit, seed):
    got = generate_pairings(n, limit, seed)
    assert len(got) == min(limit, num_pairings(n))
    for p in got:
        assert sorted(a for c in p.cells for a in c) == list(range(n))
        assert sum(len(c) == 1 for c in p.cells) == n % 2


def test_identical_valuations_have_ef1():
    rows = ((5, 3, 2, 1, 1),) * 5
    data = [IndividualInstance("same", rows)]
    rep = run_pairing_experiment(data, ExperimentConfig(limit=20, resamples=200))
    assert rep.row("exists-EF1").mean == 1


def test_couples_without_ef1():
    rows = tuple(tuple(r) for g in TABLE_NO_EF1 for r in g)
    item = IndividualInstance("no-ef1", rows)
    rec = evaluate_pairing(item, Pairing(((0, 1), (2, 3), (4, 5))), FAST)
    assert rec.values["exists-EF1"] is False
    assert rec.values["exists-EF"] is False and rec.values["exists-EFX"] is False
    assert rec.values["remove-all-EF1"] is False


def test_empty_dataset(tmp_path):
    rep = run_pairing_experiment([], FAST)
    assert rep.rows == []
    assert report_csv(rep) == ",".join(CSV_COLUMNS) + "\n"
    emit_report(rep, tmp_path / "r.svg", "svg")
    assert (tmp_path / "r.svg").read_text().startswith("<svg")


def test_bootstrap_examples():
    assert bootstrap_ci([0.25] * 7) == (0.25, 0.25)
    assert bootstrap_ci([0.4]) == (0.4, 0.4)
    lo, hi = bootstrap_ci([0, 1] * 200, resamples=5000, rng_seed=1)
    assert lo < 0.5 < hi and hi - lo < 0.2
    assert bootstrap_ci([0, 1, 1], rng_seed=4) == bootstrap_ci([0, 1, 1], rng_seed=4)
    with pytest.raises(ValueError):
        bootstrap_ci([])


def test_synthetic_data():
    data = synth_spliddit_like(60, 5)
    assert data == synth_spliddit_like(60, 5)
    for item in data:
        assert 4 <= item.num_agents <= 15 and 1 <= item.num_goods <= 59
        for row in item.values:
            assert sum(row) == 1000 and min(row) >= 0
            assert all(v.denominator == 1 for v in row)
        assert all(any(row[a] for row in item.values) for a in range(item.num_goods))


def test_dataset_round_trip(tmp_path):
    data = synth_spliddit_like(5, 2)
    save_dataset(data, tmp_path)
    assert load_dataset(tmp_path) == data


def test_report_csv_round_trip(tmp_path):
    rep = run_pairing_experiment(synth_spliddit_like(4, 0), FAST)
    rows = parse_report_csv(report_csv(rep))
    assert [r.property for r in rows] == [r.property for r in rep.rows]
    for a, b in zip(rows, rep.rows):
        assert abs(a.mean - b.mean) < 1e-6 and a.n_instances == b.n_instances
    emit_report(rep, tmp_path / "r.csv")
    assert parse_report_csv((tmp_path / "r.csv").read_text()) == rows
    with pytest.raises(ValueError):
        parse_report_csv("a,b\n")


def test_one_property_one_bar():
    rep = ExperimentReport([PropertyRow("exists-EF1", 0.5, 0.4, 0.6, 3)])
    assert report_svg(rep).count("<rect x=") == 1


def test_filters():
    data = synth_spliddit_like(10, 1)
    cfg = ExperimentConfig(limit=2, resamples=100, max_agents=4, max_goods=5)
    rep = run_pairing_experiment(data, cfg)
    kept = [d for d in data if d.num_agents == 4 and d.num_goods <= 5]
    assert rep.metadata["instances"] == len(kept)


def test_deterministic_and_consistent():
    data = synth_spliddit_like(8, 11)
    a = run_pairing_experiment(data, FAST)
    b = run_pairing_experiment(data, FAST)
    assert report_csv(a) == report_csv(b)
    for rec in a.records:
        check_implications(rec.values)
    means = {r.property: r.mean for r in a.rows}
    for strong, weak in (("EF", "EFX"), ("EFX", "EF1"), ("EF1", "PROP1")):
        assert means[f"exists-{strong}"] <= means[f"exists-{weak}"]
    for alg in ("remove-all", "remove-best"):
        assert means[f"{alg}-EF1"] <= means["exists-EF1"]
    for r in a.rows:
        assert 0 <= r.ci_lo <= r.mean <= r.ci_hi <= 1


def test_workers_do_not_change_results():
    data = synth_spliddit_like(3, 4)
    one = run_pairing_experiment(data, FAST)
    two = run_pairing_experiment(data, ExperimentConfig(**{**FAST.__dict__, "workers": 2}))
    assert report_csv(one) == report_csv(two)


def test_implication_checker_catches_violations():
    values = {p: True for p in PROPERTIES}
    values["exists-EF1"] = False
    with pytest.raises(AssertionError):
        check_implications(values)


def test_inconclusive_cells_are_excluded():
    from groupfair.experiments import PairingRecord
    p = Pairing(((0, 1), (2, 3)))
    base = {k: True for k in PROPERTIES}
    recs = [PairingRecord("a", p, {**base, "exists-EF": None}), PairingRecord("a", p, {**base, "exists-EF": False})]
    rep = aggregate(recs, FAST)
    assert rep.fractions["exists-EF"]["a"] == Fraction(0)
    assert rep.metadata["inconclusive"]["exists-EF"] == 1
