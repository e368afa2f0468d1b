import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalpairs.dataset import (
    AttributeKind,
    PairInstance,
    SplitSpec,
    augment_all,
    augment_swap,
    format_pairs,
    parse_pairs,
    split,
)
from causalpairs.errors import (
    ConfigurationError,
    ConsistencyError,
    ParseError,
    ValidationError,
)

PAIRS = "p1, 0 1 2, 2 4 6\n"
INFO = "p1,num,num\n"
TARGET = "p1,1\n"


def make_instance(pid="d0", x=(0.0, 1.0, 2.0), y=(5.0, 4.0, 3.0), label=1,
                  x_kind=AttributeKind.NUMERICAL, y_kind=AttributeKind.NUMERICAL):
    return PairInstance(pid, np.array(x), np.array(y), x_kind, y_kind, label)


class TestParse:
    def test_basic_row(self):
        (inst,) = parse_pairs(PAIRS, INFO, TARGET)
        assert inst.id == "p1"
        assert np.array_equal(inst.x, [0, 1, 2])
        assert np.array_equal(inst.y, [2, 4, 6])
        assert inst.x_kind is AttributeKind.NUMERICAL
        assert inst.y_kind is AttributeKind.NUMERICAL
        assert inst.label == 1

    def test_negative_label(self):
        (inst,) = parse_pairs(PAIRS, INFO, "p1,-1\n")
        assert inst.label == -1

    def test_binary_value_out_of_range(self):
        with pytest.raises(ValidationError):
            parse_pairs("p1, 0 1 3, 0 1 1\n", "p1,bin,bin\n", TARGET)

    def test_categorical_first_appearance_encoding(self):
        (inst,) = parse_pairs("p1, 7 7 5 9 5, 0 0 1 1 0\n", "p1,cat,bin\n", TARGET)
        assert np.array_equal(inst.x, [0, 0, 1, 2, 1])

    def test_malformed_row_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_pairs("p1, 0 1, 2 3\nbadrow\n", "p1,num,num\n", TARGET)
        assert err.value.line == 2

    def test_bad_value_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_pairs("p1, 0 zap, 2 3\n", INFO, TARGET)
        assert err.value.line == 1

    def test_missing_id_in_info(self):
        with pytest.raises(ConsistencyError):
            parse_pairs(PAIRS, "other,num,num\n", TARGET)

    def test_missing_id_in_target(self):
        with pytest.raises(ConsistencyError):
            parse_pairs(PAIRS, INFO, "other,1\n")

    def test_extra_id_in_target(self):
        with pytest.raises(ConsistencyError):
            parse_pairs(PAIRS, INFO, "p1,1\np2,0\n")

    def test_empty_vector_rejected(self):
        with pytest.raises(ValidationError):
            parse_pairs("p1, , \n", INFO, TARGET)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            parse_pairs("p1, 0 1, 2\n", INFO, TARGET)

    def test_bad_label_token(self):
        with pytest.raises(ParseError):
            parse_pairs(PAIRS, INFO, "p1,2\n")

    def test_format_round_trip(self):
        insts = parse_pairs(
            "a, 0.25 -1.5 3.0, 1 0 1\nb, 4 4 4, 0.125 7.5 -2.25\n",
            "a,num,bin\nb,cat,num\n",
            "a,1\nb,-1\n",
        )
        texts = format_pairs(insts)
        again = parse_pairs(*texts)
        for before, after in zip(insts, again):
            assert before.id == after.id
            assert np.array_equal(before.x, after.x)
            assert np.array_equal(before.y, after.y)
            assert before.label == after.label


class TestSplit:
    def _corpus(self, n):
        return [make_instance(pid=f"p{i}") for i in range(n)]

    def test_70_15_15_sizes(self):
        tr, va, te = split(self._corpus(100), SplitSpec(0.70, 0.15, seed=1))
        assert (len(tr), len(va), len(te)) == (70, 15, 15)

    def test_floor_rule_small(self):
        tr, va, te = split(self._corpus(10), SplitSpec(0.70, 0.15, seed=1))
        assert (len(tr), len(va), len(te)) == (7, 1, 2)

    def test_same_seed_same_partition(self):
        a = split(self._corpus(37), SplitSpec(seed=99))
        b = split(self._corpus(37), SplitSpec(seed=99))
        for pa, pb in zip(a, b):
            assert [i.id for i in pa] == [i.id for i in pb]

    def test_partition_is_exact(self):
        corpus = self._corpus(41)
        tr, va, te = split(corpus, SplitSpec(seed=3))
        ids = sorted(i.id for part in (tr, va, te) for i in part)
        assert ids == sorted(i.id for i in corpus)

    def test_bad_fractions(self):
        with pytest.raises(ConfigurationError):
            SplitSpec(0.9, 0.2, seed=0)
        with pytest.raises(ConfigurationError):
            SplitSpec(0.0, 0.5, seed=0)

    def test_empty_input(self):
        with pytest.raises(ValidationError):
            split([], SplitSpec())


class TestAugment:
    def test_swap_exchanges_and_negates(self):
        inst = make_instance(label=1, x_kind=AttributeKind.NUMERICAL,
                             y_kind=AttributeKind.BINARY, y=(0, 1, 0))
        sw = augment_swap(inst)
        assert sw.label == -1
        assert np.array_equal(sw.x, inst.y)
        assert np.array_equal(sw.y, inst.x)
        assert sw.x_kind is AttributeKind.BINARY
        assert sw.y_kind is AttributeKind.NUMERICAL
        assert sw.id.startswith(inst.id)

    def test_zero_label_stays_zero(self):
        assert augment_swap(make_instance(label=0)).label == 0

    def test_involution_up_to_id(self):
        inst = make_instance(label=-1)
        back = augment_swap(augment_swap(inst))
        assert np.array_equal(back.x, inst.x)
        assert np.array_equal(back.y, inst.y)
        assert back.label == inst.label
        assert (back.x_kind, back.y_kind) == (inst.x_kind, inst.y_kind)

    def test_augment_all_doubles_and_interleaves(self):
        insts = [make_instance(pid=f"p{i}", label=1) for i in range(70)]
        out = augment_all(insts)
        assert len(out) == 140
        assert out[0].id == "p0" and out[1].id.startswith("p0")

    def test_label_bookkeeping(self):
        # counts (a, b, c) for labels (1, 0, -1) become (a+c, 2b, a+c)
        insts = (
            [make_instance(pid=f"a{i}", label=1) for i in range(5)]
            + [make_instance(pid=f"b{i}", label=0) for i in range(3)]
            + [make_instance(pid=f"c{i}", label=-1) for i in range(2)]
        )
        out = augment_all(insts)
        labels = [i.label for i in out]
        assert labels.count(1) == 7
        assert labels.count(0) == 6
        assert labels.count(-1) == 7

    def test_empty(self):
        assert augment_all([]) == []


@given(
    n=st.integers(min_value=1, max_value=200),
    seed=st.integers(min_value=0, max_value=2**32),
    fracs=st.tuples(
        st.floats(min_value=0.05, max_value=0.85),
        st.floats(min_value=0.05, max_value=0.85),
    ).filter(lambda t: t[0] + t[1] < 0.999),
)
@settings(max_examples=40, deadline=None)
def test_split_partition_property(n, seed, fracs):
    corpus = [make_instance(pid=f"p{i}") for i in range(n)]
    spec = SplitSpec(train_frac=fracs[0], val_frac=fracs[1], seed=seed)
    tr, va, te = split(corpus, spec)
    assert len(tr) == int(np.floor(fracs[0] * n))
    assert len(va) == int(np.floor(fracs[1] * n))
    assert len(tr) + len(va) + len(te) == n
    assert sorted(i.id for part in (tr, va, te) for i in part) == sorted(
        i.id for i in corpus
    )


@given(labels=st.lists(st.sampled_from([1, 0, -1]), min_size=0, max_size=60))
@settings(max_examples=40, deadline=None)
def test_augment_equalizes_direction_labels(labels):
    insts = [make_instance(pid=f"p{i}", label=l) for i, l in enumerate(labels)]
    out = augment_all(insts)
    got = [i.label for i in out]
    assert len(out) == 2 * len(insts)
    assert got.count(1) == got.count(-1)
