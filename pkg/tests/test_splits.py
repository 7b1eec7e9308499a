from __future__ import annotations

import random
from fractions import Fraction

import pytest

from topicrel.labels import LABEL_ORDER, RelationLabel
from topicrel.splits import (
    DEFAULT_RATIOS,
    DuplicatePairId,
    SplitSpec,
    allocate,
    label_counts,
    load_bundle,
    make_splits,
    merge_bundles,
    save_bundle,
    split_path,
)

from util import pair

THIRDS = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))


@pytest.mark.parametrize(
    "count,expected",
    [
        (0, (0, 0, 0)),
        (1, (1, 0, 0)),
        (2, (2, 0, 0)),
        (3, (2, 0, 1)),
        (4, (3, 0, 1)),
        (10, (7, 1, 2)),
        (125, (88, 12, 25)),
        (250, (175, 25, 50)),
        (800, (560, 80, 160)),
        (1000, (700, 100, 200)),
    ],
)
def test_allocate_default_ratios(count, expected):
    assert allocate(count, DEFAULT_RATIOS) == expected
    assert sum(allocate(count, DEFAULT_RATIOS)) == count


def test_allocate_tie_goes_to_train_then_val():
    # 5 * (1/2, 1/4, 1/4) = (2.5, 1.25, 1.25): one leftover, train wins the tie
    assert allocate(5, THIRDS) == (3, 1, 1)
    # 2 * (1/2, 1/4, 1/4) = (1, 0.5, 0.5): val beats test at equal remainders
    assert allocate(2, THIRDS) == (1, 1, 0)


def test_allocate_conserves_count_for_many_sizes():
    for count in range(0, 500):
        parts = allocate(count, DEFAULT_RATIOS)
        assert sum(parts) == count
        assert all(p >= 0 for p in parts)


def test_split_spec_validation():
    SplitSpec(ratios=DEFAULT_RATIOS, seed=1)
    with pytest.raises(ValueError):
        SplitSpec(ratios=(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(ValueError):
        SplitSpec(ratios=(Fraction(3, 2), Fraction(-1, 4), Fraction(-1, 4)))
    with pytest.raises(ValueError):
        SplitSpec(ratios=(Fraction(1, 2), Fraction(1, 2)))  # type: ignore[arg-type]


def _pairs(n_per_label: int, source: str = "s") -> list:
    pairs = []
    for label in LABEL_ORDER:
        for i in range(n_per_label):
            pairs.append(pair(f"{source} {label.value} a{i}", f"{source} b{i}", label, source=source))
    return pairs


def test_make_splits_is_stratified():
    pairs = _pairs(25)
    bundle = make_splits(pairs, SplitSpec(seed=7), name="s")
    assert (len(bundle.train), len(bundle.val), len(bundle.test)) == (72, 8, 20)
    # every label is allocated independently

    for label in LABEL_ORDER:
        n_train = sum(1 for p in bundle.train if p.label is label)
        n_val = sum(1 for p in bundle.val if p.label is label)
        n_test = sum(1 for p in bundle.test if p.label is label)
        assert (n_train, n_val, n_test) == allocate(25, DEFAULT_RATIOS)


def test_label_counts_covers_every_label():
    assert label_counts(_pairs(3)) == {
        "broader": 3,
        "narrower": 3,
        "other": 3,
        "same-as": 3,
    }


def test_make_splits_partitions_the_input():
    pairs = _pairs(10)
    bundle = make_splits(pairs, SplitSpec(seed=3), name="s")
    assert sorted(p.pair_id for p in bundle.all_pairs()) == sorted(p.pair_id for p in pairs)


def test_make_splits_is_deterministic_and_order_independent():
    pairs = _pairs(12)
    spec = SplitSpec(seed=99)
    first = make_splits(pairs, spec, name="s")
    shuffled = list(pairs)
    random.Random(0).shuffle(shuffled)
    second = make_splits(shuffled, spec, name="s")
    assert first.train == second.train
    assert first.val == second.val
    assert first.test == second.test


def test_make_splits_seed_changes_membership():
    pairs = _pairs(12)
    first = make_splits(pairs, SplitSpec(seed=1), name="s")
    second = make_splits(pairs, SplitSpec(seed=2), name="s")
    assert {p.pair_id for p in first.test} != {p.pair_id for p in second.test}


def test_duplicate_pair_id_is_rejected():
    p1 = pair("a", "b", RelationLabel.BROADER, pair_id="dup")
    p2 = pair("c", "d", RelationLabel.BROADER, pair_id="dup")
    with pytest.raises(DuplicatePairId):
        make_splits([p1, p2], SplitSpec(seed=0), name="s")


def test_duplicate_content_is_rejected():
    p1 = pair("a", "b", RelationLabel.BROADER, pair_id="one")
    p2 = pair("a", "b", RelationLabel.BROADER, pair_id="two")
    with pytest.raises(ValueError) as excinfo:
        make_splits([p1, p2], SplitSpec(seed=0), name="s")
    assert "content" in str(excinfo.value)


def test_merge_bundles_concatenates_split_wise():
    one = make_splits(_pairs(10, source="one"), SplitSpec(seed=5), name="one")
    two = make_splits(_pairs(5, source="two"), SplitSpec(seed=5), name="two")
    merged = merge_bundles([one, two], name="merged")
    assert len(merged.train) == len(one.train) + len(two.train)
    assert len(merged.val) == len(one.val) + len(two.val)
    assert len(merged.test) == len(one.test) + len(two.test)
    assert merged.train[: len(one.train)] == one.train


def test_merge_bundles_rejects_shared_pair_ids():
    one = make_splits(_pairs(5, source="one"), SplitSpec(seed=5), name="one")
    with pytest.raises(DuplicatePairId):
        merge_bundles([one, one], name="merged")


def test_save_and_load_round_trip(tmp_path):
    bundle = make_splits(_pairs(8), SplitSpec(seed=11), name="demo")
    counts = save_bundle(bundle, tmp_path)
    assert counts == {"train": len(bundle.train), "val": len(bundle.val), "test": len(bundle.test)}
    loaded = load_bundle(tmp_path, "demo")
    assert loaded.train == bundle.train
    assert loaded.val == bundle.val
    assert loaded.test == bundle.test


def test_split_path_rejects_unknown_split(tmp_path):
    assert split_path(tmp_path, "demo", "val").name == "demo.val.jsonl"
    with pytest.raises(ValueError):
        split_path(tmp_path, "demo", "dev")


def test_degenerate_ratios_put_everything_in_one_split():
    spec = SplitSpec(ratios=(Fraction(0), Fraction(0), Fraction(1)), seed=2)
    bundle = make_splits(_pairs(6), spec, name="s")
    assert (len(bundle.train), len(bundle.val), len(bundle.test)) == (0, 0, 24)
