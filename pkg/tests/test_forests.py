import pytest
from hypothesis import given, strategies as st

from shardcalc.ground import GroundSet, Partition, GroundMismatchError
from shardcalc.forests import (
    AmbiguousLayeringError,
    BoundaryMismatchError,
    Cut,
    ForestSyntaxError,
    LayeredForest,
    SignedForestSum,
    all_trees,
    antisymmetrize,
    compose,
    cut_forest,
    format_forest,
    identity_forest,
    iter_forests,
    merge,
    parse_forest,
)

G3 = GroundSet.of_size(3)
G4 = GroundSet.of_size(4)


def serials(F):
    return [(c.parent, c.left) for c in F.cuts]


def test_parse_single_cut():
    F = parse_forest(G3, "[1,23]")
    assert F.source == Partition(G3, [0b111])
    assert F.target == Partition(G3, [0b001, 0b110])
    assert serials(F) == [(0b111, 0b001)]


def test_parse_nested_chain():
    g = GroundSet(["2", "3", "5"])
    F = parse_forest(g, "[[2,3],5]")
    assert F.source.format() == "(235)"
    assert F.target.format() == "(2|3|5)"
    # root cut first, then the inner cut of {2,3}
    assert serials(F) == [(0b111, 0b011), (0b011, 0b001)]


def test_parse_layering_sugar():
    FL = parse_forest(G4, "[[1,2],[3,4]]@L")
    FR = parse_forest(G4, "[[1,2],[3,4]]@R")
    assert serials(FL) == [(0b1111, 0b0011), (0b0011, 0b0001), (0b1100, 0b0100)]
    assert serials(FR) == [(0b1111, 0b0011), (0b1100, 0b0100), (0b0011, 0b0001)]
    # sugar and explicit permutations agree
    assert FL == parse_forest(G4, "[[1,2],[3,4]]@012")
    assert FR == parse_forest(G4, "[[1,2],[3,4]]@021")
    assert FL == parse_forest(G4, "[[1,2],[3,4]]@0,1,2")


def test_parse_requires_annotation_when_ambiguous():
    with pytest.raises(AmbiguousLayeringError):
        parse_forest(G4, "[[1,2],[3,4]]")
    with pytest.raises(AmbiguousLayeringError):
        parse_forest(G4, "[1,2]|[3,4]")


def test_layering_sugar_needs_exactly_two():
    # a chain has a unique layering
    with pytest.raises(AmbiguousLayeringError):
        parse_forest(G3, "[[1,2],3]@L")
    # three one-cut trees admit six layerings
    g6 = GroundSet.of_size(6)
    with pytest.raises(AmbiguousLayeringError):
        parse_forest(g6, "[1,2]|[3,4]|[5,6]@L")


def test_parse_rejects_bad_permutations():
    with pytest.raises(ForestSyntaxError):
        parse_forest(G4, "[[1,2],[3,4]]@011")
    with pytest.raises(ForestSyntaxError):
        parse_forest(G4, "[[1,2],[3,4]]@120")  # inner cut before the root
    with pytest.raises(ForestSyntaxError):
        parse_forest(G4, "[[1,2],[3,4]]@xy")


def test_parse_syntax_errors_carry_position():
    with pytest.raises(ForestSyntaxError) as e:
        parse_forest(G3, "[1,23")
    assert e.value.pos == 5
    with pytest.raises(ForestSyntaxError):
        parse_forest(G3, "[1;23]")
    with pytest.raises(ForestSyntaxError):
        parse_forest(G3, "[1,4]")
    with pytest.raises(ForestSyntaxError):
        parse_forest(G3, "[1,[2,1]]")


def test_parse_leaves_and_braces():
    g = GroundSet(["a1", "b", "c"])
    F = parse_forest(g, "[{a1,c},b]")
    assert serials(F) == [(0b111, 0b101)]
    assert format_forest(F) == "[{a1,c},b]"
    # single multi-char label needs no braces
    assert format_forest(parse_forest(g, "[a1,{b,c}]")) == "[a1,{b,c}]"


def test_identity_and_leaf_only_forests():
    P = Partition(G4, [0b0011, 0b1100])
    F = parse_forest(G4, "12|34")
    assert F == identity_forest(P)
    assert F.is_identity()
    assert format_forest(F) == "12|34"


def test_cut_validation():
    with pytest.raises(ValueError):
        Cut(G3, 0b011, 0b100)  # left outside parent
    with pytest.raises(ValueError):
        Cut(G3, 0b011, 0)
    with pytest.raises(ValueError):
        Cut(G3, 0b011, 0b011)  # left must be proper
    P = Partition(G3, [0b111])
    with pytest.raises(ValueError):
        LayeredForest(P, [Cut(G3, 0b011, 0b001)])  # splits an absent block


def test_compose_unital_and_boundary():
    P = Partition(G4, [0b1111])
    F1 = cut_forest(P, 0b1111, 0b0011)
    assert compose(identity_forest(P), F1) == F1
    assert compose(F1, identity_forest(F1.target)) == F1
    F2 = cut_forest(F1.target, 0b0011, 0b0001)
    with pytest.raises(BoundaryMismatchError):
        compose(F2, F1)
    with pytest.raises(GroundMismatchError):
        compose(F1, cut_forest(Partition(G3, [0b111]), 0b111, 0b001))


def test_compose_associative_exhaustive():
    P = Partition(G4, [0b1111])
    for F1 in iter_forests(P, 1):
        for F2 in iter_forests(F1.target, 1):
            for F3 in iter_forests(F2.target, 1):
                assert compose(compose(F1, F2), F3) == compose(
                    F1, compose(F2, F3)
                )


def test_compose_keeps_outer_cuts_first():
    P = Partition(G4, [0b1111])
    F1 = cut_forest(P, 0b1111, 0b0011)
    F2 = cut_forest(F1.target, 0b1100, 0b0100)
    F3 = cut_forest(F2.target, 0b0011, 0b0001)
    c = compose(compose(F1, F2), F3)
    assert serials(c) == [(0b1111, 0b0011), (0b1100, 0b0100), (0b0011, 0b0001)]
    assert format_forest(c) == "[[1,2],[3,4]]@021"


def test_merge_disjoint_blocks():
    P = Partition(G4, [0b0011, 0b1100])
    A = cut_forest(P, 0b0011, 0b0001)
    B = cut_forest(P, 0b1100, 0b0100)
    m = merge(A, B)
    assert serials(m) == [(0b0011, 0b0001), (0b1100, 0b0100)]
    with pytest.raises(ValueError):
        merge(A, A)
    Q = Partition(G4, [0b1111])
    with pytest.raises(BoundaryMismatchError):
        merge(A, cut_forest(Q, 0b1111, 0b0001))


def test_antisymmetrize_single_cut():
    F = parse_forest(G3, "[12,3]")
    terms = list(antisymmetrize(F))
    assert terms[0] == (1, F)
    assert terms[1] == (-1, parse_forest(G3, "[3,12]"))
    assert len(terms) == 2


def test_antisymmetrize_two_cuts():
    F = parse_forest(G3, "[[1,2],3]")
    got = {(s, format_forest(f)) for s, f in antisymmetrize(F)}
    assert got == {
        (1, "[[1,2],3]"),
        (-1, "[3,[1,2]]"),
        (-1, "[[2,1],3]"),
        (1, "[3,[2,1]]"),
    }


def test_antisymmetrize_signs_cancel():
    for text in ("[1,23]", "[[1,2],3]", "[[1,2],[3,4]]@L"):
        g = G4 if "4" in text else G3
        total = sum(s for s, _ in antisymmetrize(parse_forest(g, text)))
        assert total == 0


def test_signed_sum_endpoint_check():
    P = Partition(G4, [0b1111])
    F1 = cut_forest(P, 0b1111, 0b0011)
    F2 = cut_forest(P, 0b1111, 0b1100)
    s = SignedForestSum([(1, F1), (-1, F2)])
    assert s.source == P
    with pytest.raises(BoundaryMismatchError):
        SignedForestSum([(1, F1), (1, cut_forest(F1.target, 0b0011, 0b0001))])


def test_all_trees_examples():
    P = Partition(G3, [0b111])
    sticks = all_trees(P, 0b111, [G3.subset_from_mask(0b111)])
    assert sticks == [identity_forest(P)]
    two = all_trees(P, 0b111, [G3.subset_from_mask(0b001), G3.subset_from_mask(0b110)])
    assert [format_forest(t) for t in two] == ["[1,23]", "[23,1]"]
    singles = [G3.subset_from_mask(1 << i) for i in range(3)]
    twelve = all_trees(P, 0b111, singles)
    assert len(twelve) == 12
    assert len({format_forest(t) for t in twelve}) == 12
    for t in twelve:
        assert t.source == P
        assert t.target == Partition(G3, [1, 2, 4])


def test_all_trees_against_merge_sequences():
    # independent construction: reverse every layered tree into an ordered
    # merge sequence; build all such sequences directly and compare
    P = Partition(G4, [0b1111])
    singles = [G4.subset_from_mask(1 << i) for i in range(4)]
    built = {t.serial() for t in all_trees(P, 0b1111, singles)}

    seqs = set()

    def rec(blocks, cuts):
        if len(blocks) == 1:
            seqs.add(tuple(reversed(cuts)))
            return
        for i, a in enumerate(blocks):
            for j, b in enumerate(blocks):
                if i == j:
                    continue
                rest = [blocks[k] for k in range(len(blocks)) if k not in (i, j)]
                rec(rest + [a | b], cuts + [(a | b, a)])

    rec([1, 2, 4, 8], [])
    assert built == seqs
    assert len(built) == 144


def test_all_trees_validation():
    P = Partition(G4, [0b0011, 0b1100])
    with pytest.raises(ValueError):
        all_trees(P, 0b0111, [G4.subset_from_mask(0b0111)])
    with pytest.raises(ValueError):
        all_trees(P, 0b0011, [G4.subset_from_mask(0b0001)])
    with pytest.raises(ValueError):
        all_trees(P, 0b0011, [G4.subset_from_mask(0b0011), G4.subset_from_mask(0b0001)])


def test_roundtrip_exhaustive_small():
    P = Partition(G4, [0b1111])
    pool = iter_forests(P, 3)
    assert len(pool) == 231
    for F in pool:
        assert parse_forest(G4, format_forest(F)) == F
    P2 = Partition(G4, [0b0101, 0b1010])
    for F in iter_forests(P2, 2):
        assert parse_forest(G4, format_forest(F)) == F


def test_format_omits_annotation_only_when_unique():
    assert format_forest(parse_forest(G3, "[[1,2],3]")) == "[[1,2],3]"
    F = parse_forest(G4, "[[1,2],[3,4]]@L")
    assert format_forest(F).endswith("@012")


_POOL = iter_forests(Partition(G4, [0b1111]), 3) + iter_forests(
    Partition(G4, [0b0011, 0b1100]), 3
)


@given(st.sampled_from(_POOL))
def test_roundtrip_property(F):
    assert parse_forest(G4, format_forest(F)) == F


@given(st.sampled_from([F for F in _POOL if F.cuts]))
def test_antisymmetrize_shape(F):
    terms = list(antisymmetrize(F))
    assert len(terms) == 1 << len(F.cuts)
    assert terms[0] == (1, F)
    seen = {f.serial() for _, f in terms}
    assert len(seen) == len(terms)
    for s, f in terms:
        assert f.source == F.source
        assert f.target == F.target
        assert s in (1, -1)
