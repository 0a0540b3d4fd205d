import json
from fractions import Fraction

import pytest

from shardcalc.arrangement import enumerate_shards
from shardcalc.audit import (
    CHAMBER_COUNTS,
    SAMPLE_SEED,
    AuditEntry,
    AuditReport,
    EgfSeries,
    _shard_ref,
    _vector_ref,
    full_audit,
    replay_counterexample,
    verify_factorization,
    verify_kernel_theorem,
    verify_lie_axioms,
    verify_module_axioms,
    zie_dimension,
    zie_series,
)
from shardcalc.calculus import (
    InvariantViolation,
    ShardVector,
    random_functional,
)
from shardcalc.exactla import rat
from shardcalc.forests import (
    Cut,
    LayeredForest,
    compose,
    cut_forest,
    format_forest,
    identity_forest,
    parse_forest,
)
from shardcalc.ground import GroundSet, Partition
from shardcalc.steinmann import steinmann_classes, steinmann_relations

G4 = GroundSet.of_size(4)


def series_oracle(upto):
    # -log(2 - e^x) recomputed with Fraction arithmetic only
    fact = [1]
    for k in range(1, upto + 1):
        fact.append(fact[-1] * k)
    u = [Fraction(0)] + [Fraction(1, fact[k]) for k in range(1, upto + 1)]
    total = [Fraction(0)] * (upto + 1)
    power = [Fraction(1)] + [Fraction(0)] * upto
    for m in range(1, upto + 1):
        nxt = [Fraction(0)] * (upto + 1)
        for a in range(upto + 1):
            for b in range(1, upto + 1 - a):
                nxt[a + b] += power[a] * u[b]
        power = nxt
        for d in range(upto + 1):
            total[d] += power[d] / m
    dims = []
    for nn in range(1, upto + 1):
        c = total[nn] * fact[nn]
        assert c.denominator == 1
        dims.append(int(c))
    return dims


def bell(n):
    # Bell numbers by the triangle recurrence
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


def test_zie_series_matches_fraction_oracle():
    want = series_oracle(8)
    got = [zie_dimension(k) for k in range(1, 9)]
    assert got == want
    assert got[:6] == [1, 2, 6, 26, 150, 1082]


def test_zie_series_object():
    s = zie_series(5)
    assert s.dimension(0) == 0
    assert s.dimension(3) == 6
    with pytest.raises(ValueError):
        s.dimension(6)
    with pytest.raises(ValueError):
        zie_dimension(0)
    with pytest.raises(ValueError):
        zie_dimension(13)


def test_egf_series_rejects_non_dimensions():
    with pytest.raises(InvariantViolation):
        EgfSeries([rat("1/3")]).dimension(0)
    with pytest.raises(InvariantViolation):
        EgfSeries([rat(-2)]).dimension(0)


def test_lie_axioms_counts_small():
    # n=2: the single bipartition of (1|2), one tree each side
    r = verify_lie_axioms(2)
    assert r.passed
    assert r.entry("lie.antisymmetry").instances == 1
    assert r.entry("lie.jacobi").instances == 0
    # n=3: 6 bipartitions of the blocks of (1|2|3), doubletons carry two
    # trees, so 3*1 + 3*2 over singletons plus one pair for each of the
    # three two-block partitions
    r = verify_lie_axioms(3)
    assert r.passed
    assert r.entry("lie.antisymmetry").instances == 12
    assert r.entry("lie.jacobi").instances == 1


def test_lie_axioms_exhaustive_n4():
    r = verify_lie_axioms(4)
    assert r.passed
    assert r.entry("lie.antisymmetry").instances > 100
    assert r.entry("lie.jacobi").instances > 10


def test_lie_axioms_bounds():
    with pytest.raises(ValueError):
        verify_lie_axioms(1)
    with pytest.raises(ValueError):
        verify_lie_axioms(6)


def test_module_axioms_small():
    r = verify_module_axioms(3)
    assert r.passed
    assert r.entry("module.unit").instances == 13
    assert r.entry("module.action").instances == 49
    with pytest.raises(ValueError):
        verify_module_axioms(5)


def test_module_axioms_n4():
    r = verify_module_axioms(4)
    assert r.passed
    # the relation span itself must ride through the identity tree
    assert r.entry("module.coset_kernel").instances >= len(
        steinmann_relations(G4).relations)
    assert r.entry("module.layering").instances > 0


def test_kernel_theorem_pair_counts():
    # pairs (P, R) with P finer than R number sum over R of the product
    # of Bell numbers of the block sizes
    for n, want in ((2, 3), (3, 12), (4, 60)):
        r = verify_kernel_theorem(n)
        assert r.passed
        assert r.entry("kernel.span").instances == want
        assert r.entry("kernel.surjective").instances == want
    assert bell(4) == 15 and bell(5) == 52


def test_factorization_suite():
    r = verify_factorization(3)
    assert r.passed
    assert r.entry("factorization.dimension").instances == bell(3)
    r = verify_factorization(4)
    assert r.passed
    assert r.entry("factorization.dimension").instances == bell(4)


def test_full_audit_small_and_json():
    r = full_audit(2)
    assert r.passed
    claims = [e.claim for e in r.entries]
    assert claims == sorted(claims)
    assert "lie.antisymmetry" in claims
    assert "maintheorem.converse" not in claims  # no relations below four
    assert "delayering.separation" not in claims
    obj = r.to_json_obj()
    text = json.dumps(obj, sort_keys=True)
    assert '"passed": true' in text
    assert r.format_text().startswith("suite full at n=2: PASS")


def test_full_audit_n3_claim_set():
    r = full_audit(3)
    assert r.passed
    got = {e.claim for e in r.entries}
    assert got == {
        "calculus.functoriality",
        "counts.maximal_shards",
        "dims.series",
        "duality.relations",
        "factorization.diagram",
        "factorization.dimension",
        "kernel.span",
        "kernel.surjective",
        "lie.antisymmetry",
        "lie.jacobi",
        "maintheorem.annihilator",
        "module.action",
        "module.coset_kernel",
        "module.layering",
        "module.unit",
    }
    for e in r.entries:
        assert e.statement
        assert e.counterexample is None


def test_audit_entry_json_shape():
    e = AuditEntry("x.y", "statement", 3, 7, False,
                   counterexample={"claim": "x.y"}, notes={"seed": 1})
    obj = e.to_json_obj()
    assert obj["passed"] is False
    assert obj["counterexample"] == {"claim": "x.y"}
    assert obj["notes"] == {"seed": 1}
    ok = AuditEntry("x.y", "statement", 3, 7, True)
    assert "counterexample" not in ok.to_json_obj()


def test_audit_report_merge_sorts_and_verdicts():
    a = AuditReport("one", 2, [AuditEntry("b.claim", "s", 2, 1, True)])
    b = AuditReport("two", 2, [AuditEntry("a.claim", "s", 2, 1, False)])
    merged = AuditReport.merge("all", 2, [a, b])
    assert [e.claim for e in merged.entries] == ["a.claim", "b.claim"]
    assert not merged.passed
    assert "FAIL" in merged.format_text()
    with pytest.raises(KeyError):
        merged.entry("missing")


def _antisym_instance():
    split = Partition(G4, [0b0011, 0b1100])
    merged = Partition(G4, [0b1111])
    inner = LayeredForest(
        split, [Cut(G4, 0b0011, 0b0001), Cut(G4, 0b1100, 0b0100)])
    A = compose(cut_forest(merged, 0b1111, 0b0011), inner)
    B = compose(cut_forest(merged, 0b1111, 0b1100), inner)
    X = enumerate_shards(A.target)[0]
    return {
        "claim": "lie.antisymmetry",
        "ground": list(G4.labels),
        "forests": [format_forest(A), format_forest(B)],
        "shard": _shard_ref(X),
    }


def test_replay_antisymmetry_true_and_false():
    ce = _antisym_instance()
    assert replay_counterexample(ce) is True
    bad = dict(ce, forests=[ce["forests"][0], ce["forests"][0]])
    assert replay_counterexample(bad) is False


def test_replay_jacobi():
    merged = Partition(G4, [0b1111])
    split = Partition(G4, [0b0011, 0b0100, 0b1000])
    inner = LayeredForest(split, [Cut(G4, 0b0011, 0b0001)])
    B1, B2, B3 = 0b0011, 0b0100, 0b1000
    terms = []
    for Ba, Bb in ((B1, B2), (B3, B1), (B2, B3)):
        skel = LayeredForest(
            merged, [Cut(G4, 0b1111, Ba | Bb), Cut(G4, Ba | Bb, Ba)])
        terms.append(compose(skel, inner))
    X = enumerate_shards(terms[0].target)[0]
    ce = {
        "claim": "lie.jacobi",
        "ground": list(G4.labels),
        "forests": [format_forest(F) for F in terms],
        "shard": _shard_ref(X),
    }
    assert replay_counterexample(ce) is True
    assert replay_counterexample(dict(ce, forests=ce["forests"][:2])) is False


def test_replay_module_claims():
    one = Partition.one_block(G4)
    X = enumerate_shards(one)[0]
    ce = {
        "claim": "module.unit",
        "ground": list(G4.labels),
        "forests": [format_forest(identity_forest(one))],
        "shard": _shard_ref(X),
    }
    assert replay_counterexample(ce) is True

    T = parse_forest(G4, "[12,34]")
    F = parse_forest(G4, "[1,2]|34")
    Y = enumerate_shards(F.target)[0]
    ce = {
        "claim": "module.action",
        "ground": list(G4.labels),
        "forests": [format_forest(T), format_forest(F)],
        "shard": _shard_ref(Y),
    }
    assert replay_counterexample(ce) is True

    rel = steinmann_relations(G4).relations[0]
    ce = {
        "claim": "module.coset_kernel",
        "ground": list(G4.labels),
        "forests": [format_forest(identity_forest(one))],
        "vector": _vector_ref(rel),
    }
    assert replay_counterexample(ce) is True
    bad = dict(ce, vector=_vector_ref(ShardVector.basis(X)))
    assert replay_counterexample(bad) is False

    FL = parse_forest(G4, "[[1,2],[3,4]]@L")
    FR = parse_forest(G4, "[[1,2],[3,4]]@R")
    Z = enumerate_shards(FL.target)[0]
    ce = {
        "claim": "module.layering",
        "ground": list(G4.labels),
        "forests": [format_forest(FL), format_forest(FR)],
        "shard": _shard_ref(Z),
    }
    assert replay_counterexample(ce) is True


def test_replay_kernel_and_factorization_claims():
    base = {"ground": list(G4.labels), "fine": "(1|2|34)", "coarse": "(12|34)"}
    assert replay_counterexample(dict(base, claim="kernel.span")) is True
    assert replay_counterexample(dict(base, claim="kernel.surjective")) is True

    P = Partition.parse(G4, "(12|34)")
    F = parse_forest(G4, "[1,2]|34")
    X = enumerate_shards(F.target)[0]
    ce = {
        "claim": "factorization.diagram",
        "ground": list(G4.labels),
        "support": P.format(),
        "forests": [format_forest(F)],
        "shard": _shard_ref(X),
    }
    assert replay_counterexample(ce) is True

    from shardcalc.steinmann import simple_flat

    factors = [random_functional(simple_flat(P, T), 11 + j)
               for j, T in enumerate(P.blocks)]
    ce = {
        "claim": "factorization.diagram",
        "ground": list(G4.labels),
        "support": P.format(),
        "forests": [format_forest(F)],
        "functionals": [f.to_json_obj() for f in factors],
    }
    assert replay_counterexample(ce) is True

    ce = {
        "claim": "factorization.dimension",
        "ground": list(G4.labels),
        "support": "(12|34)",
    }
    assert replay_counterexample(ce) is True


def test_replay_maintheorem_and_global_claims():
    one = Partition.one_block(G4)
    basis = steinmann_relations(G4).annihilator_basis()
    F = parse_forest(G4, "[12,34]")
    cls = [c for c in steinmann_classes(F.target, F.target) if len(c) > 1][0]
    ce = {
        "claim": "maintheorem.annihilator",
        "ground": list(G4.labels),
        "forests": [format_forest(F)],
        "functional": basis[0].to_json_obj(),
        "shards": [_shard_ref(cls[0]), _shard_ref(cls[1])],
    }
    assert replay_counterexample(ce) is True

    f = random_functional(one, SAMPLE_SEED)
    ce = {
        "claim": "maintheorem.converse",
        "ground": list(G4.labels),
        "functional": f.to_json_obj(),
    }
    assert replay_counterexample(ce) is True
    assert replay_counterexample(dict(ce, functional=None)) is False

    ce = {
        "claim": "delayering.annihilator",
        "ground": list(G4.labels),
        "forests": ["[[1,2],[3,4]]@L", "[[1,2],[3,4]]@R"],
        "functional": basis[0].to_json_obj(),
        "shard": _shard_ref(enumerate_shards(
            parse_forest(G4, "[[1,2],[3,4]]@L").target)[0]),
    }
    assert replay_counterexample(ce) is True

    assert replay_counterexample({
        "claim": "delayering.separation",
        "ground": list(G4.labels),
        "seed": SAMPLE_SEED,
    }) is True
    assert replay_counterexample({
        "claim": "duality.relations",
        "ground": list(G4.labels),
        "functional": basis[0].to_json_obj(),
    }) is True
    assert replay_counterexample({
        "claim": "counts.maximal_shards",
        "ground": list(G4.labels),
    }) is True
    assert replay_counterexample({
        "claim": "dims.series",
        "ground": list(G4.labels),
    }) is True
    with pytest.raises(ValueError):
        replay_counterexample({"claim": "no.such", "ground": ["1"]})


def test_chamber_counts_table():
    assert CHAMBER_COUNTS == {1: 1, 2: 2, 3: 6, 4: 32, 5: 370, 6: 11292}
