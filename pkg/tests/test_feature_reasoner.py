import itertools
import random

import pytest

from elbow.feature_model import enumerate_countermodel, extension, is_model, validate_interpretation
from elbow.feature_reasoner import (
    Entailed,
    FeatureAssignment,
    NotEntailed,
    build_canonical_model,
    classify,
    decide_subsumption,
    el_complete,
    encode_sat,
    feature_bound,
    interpolative_saturate,
    is_proper,
    step2_augment,
    theta_hat,
)
from elbow.normalizer import normalize
from elbow.sat import dpll_solve
from elbow.syntax import TOP, Between, ConceptInclusion, Exists, Name, TBox, parse_concept, parse_tbox

from randgen import rand_tbox


def ci(text):
    lhs, rhs = text.split("<=")
    return ConceptInclusion(parse_concept(lhs), parse_concept(rhs))


def nt(text):
    return normalize(parse_tbox(text))


def fs(*ks):
    return frozenset(f"f{k}" for k in ks)


def assert_countermodel(res, t, lhs, rhs):
    m = res.model
    assert validate_interpretation(m) == []
    assert is_model(m, t) == []
    assert not extension(m, lhs) <= extension(m, rhs)


# --- completion ------------------------------------------------------------------


def test_completion_transitivity():
    assert el_complete(nt("A <= B; B <= C;")).entails(Name("A"), Name("C"))


def test_completion_existential_chain():
    st = el_complete(nt("A <= some r. B; B <= C; some r. C <= D;"))
    assert st.entails(Name("A"), Name("D"))
    assert st.entails(Name("A"), Exists("r", Name("B")))


def test_completion_of_empty_tbox():
    st = el_complete(normalize(TBox((), frozenset({"A"}))))
    assert st.derived == {ci("A <= A"), ci("A <= top"), ci("top <= top")}


# --- feature assignments -------------------------------------------------------------


def test_theta_hat():
    theta = {"B1": fs(1, 2), "B2": fs(2, 3)}
    assert theta_hat(theta, Between(Name("B1"), Name("B2"))) == fs(2)
    assert theta_hat(theta, TOP) == frozenset()
    assert theta_hat(theta, Exists("r", Name("B1"))) == frozenset()


def test_is_proper():
    t = nt("A <= B;")
    assert is_proper(FeatureAssignment({"A": fs(1), "B": fs(1)}, fs(1, 2)), t) == []
    assert is_proper(FeatureAssignment({"A": frozenset(), "B": fs(1)}, fs(1, 2)), t) == [ci("A <= B")]
    t = nt("natural A1, A2; A1 & A2 <= B;")
    th = FeatureAssignment({"A1": fs(1), "A2": fs(2), "B": fs(1, 2)}, fs(1, 2, 3))
    assert is_proper(th, t) == []


def test_step2_augment():
    t = nt("natural B; A <= A;")
    out = step2_augment(t, FeatureAssignment({"A": fs(1), "B": frozenset()}, fs(1, 2)))
    assert ci("A <= B") in out.cis
    t = nt("natural B1, B2; X <= btw(B1, B2);")
    th = FeatureAssignment({"A": fs(1), "X": frozenset(), "B1": fs(1, 2), "B2": fs(1, 3)}, fs(1, 2, 3))
    t = normalize(t.as_tbox().with_statements([ci("A <= A")]))
    assert ci("A <= btw(B1, B2)") in step2_augment(t, th).cis
    t = nt("natural B; A <= A;")
    out = step2_augment(t, FeatureAssignment({"A": frozenset(), "B": fs(1)}, fs(1, 2)))
    assert ci("A <= B") not in out.cis


def test_canonical_model_direct_construction():
    st = el_complete(normalize(TBox((), frozenset({"A"}))))
    m = build_canonical_model(st, FeatureAssignment({"A": fs(1)}, fs(1, 2)))
    assert len(m.domain) == 4
    assert validate_interpretation(m) == []


def test_canonical_model_rejects_full_feature_set():
    st = el_complete(normalize(TBox((), frozenset({"A"}))))
    with pytest.raises(ValueError):
        build_canonical_model(st, FeatureAssignment({"A": fs(1, 2)}, fs(1, 2)))


# --- decisions ---------------------------------------------------------------------------


def test_zoo(zoo):
    res = decide_subsumption(zoo, Name("Zebra"), Name("Herbivore"))
    assert isinstance(res, Entailed) and res
    assert any(step.rule == "S2" for step in res.trace)
    for a, b in [("Herbivore", "Zebra"), ("Rabbit", "Zebra"), ("Zebra", "Giraffe")]:
        res = decide_subsumption(zoo, Name(a), Name(b))
        assert isinstance(res, NotEntailed) and not res
        assert_countermodel(res, zoo, Name(a), Name(b))


def test_interpolation_under_a_shared_context():
    text = "natural A, B, C, D; A & C <= B; A & D <= B; X <= btw(C, D);"
    t = parse_tbox(text)
    assert decide_subsumption(t, parse_concept("A & X"), Name("B")).entailed
    t2 = parse_tbox(text.replace("natural A, B, C, D;", "natural A, C, D;"))
    res = decide_subsumption(t2, parse_concept("A & X"), Name("B"))
    assert not res.entailed
    assert_countermodel(res, t2, parse_concept("A & X"), Name("B"))


def test_non_interference_is_rejected():
    with pytest.raises(ValueError):
        decide_subsumption(parse_tbox("natural A, C, D; ni(A; C, D);"), Name("A"), Name("C"))


def test_classify(zoo):
    table = classify(zoo)
    assert table[("Zebra", "Herbivore")] and not table[("Herbivore", "Zebra")]
    table = classify(TBox((), frozenset({"A", "B"})))
    assert {k for k, v in table.items() if v} == {("A", "A"), ("B", "B")}


def test_classify_is_a_preorder():
    rng = random.Random(4)
    for _ in range(40):
        t, names = rand_tbox(rng, n_names=5, n_cis=6)
        table = classify(t, names)
        for a in names:
            assert table[(a, a)]
        for a, b, c in itertools.product(names, repeat=3):
            if table[(a, b)] and table[(b, c)]:
                assert table[(a, c)]


# --- global encoding -----------------------------------------------------------------------


def test_encoding_examples(zoo):
    t = nt("A <= B;")
    assert dpll_solve(encode_sat(t, ci("A <= B")).problem, learn=True) is None
    t = normalize(TBox((), frozenset({"A", "B"})))
    assert dpll_solve(encode_sat(t, ci("A <= B")).problem, learn=True) is not None
    z = normalize(zoo)
    assert dpll_solve(encode_sat(z, ci("Zebra <= Herbivore")).problem, learn=True) is None
    assert feature_bound(z) == 2 * (len(z.as_tbox().signature) + 1)


def test_dimacs_export():
    enc = encode_sat(nt("A <= B;"), ci("A <= B"))
    text = enc.problem.to_dimacs()
    assert text.splitlines()[-len(enc.problem.clauses) - 1].startswith("p cnf ")


# --- cross-validation ---------------------------------------------------------------------


def test_fixpoint_and_global_agree():
    rng = random.Random(21)
    for _ in range(25):
        t, names = rand_tbox(rng, n_names=4, n_cis=4, n_btw=2)
        a, b = rng.sample(names, 2)
        fix = decide_subsumption(t, Name(a), Name(b), trace=False)
        glob = decide_subsumption(t, Name(a), Name(b), method="global", trace=False)
        assert fix.entailed == glob.entailed, (t, a, b)


def test_enumerator_never_refutes_an_entailment():
    rng = random.Random(22)
    for _ in range(80):
        t, names = rand_tbox(rng, n_names=4, n_cis=5, n_btw=2)
        a, b = rng.sample(names, 2)
        res = decide_subsumption(t, Name(a), Name(b), trace=False)
        found = enumerate_countermodel(t, a, b, max_features=2)
        if res.entailed:
            assert found is None, (t, a, b)
        else:
            assert_countermodel(res, t, Name(a), Name(b))


def test_interpolative_saturation_is_sound():
    rng = random.Random(23)
    for _ in range(40):
        t, names = rand_tbox(rng, n_names=5, n_cis=6, n_btw=2)
        n = normalize(t)
        derived = interpolative_saturate(n).derived
        for c in derived:
            if isinstance(c.lhs, Name) and isinstance(c.rhs, Name) and c.lhs.name in names and c.rhs.name in names:
                assert decide_subsumption(t, c.lhs, c.rhs, trace=False).entailed, c


def test_interpolative_rules():
    st = interpolative_saturate(nt("natural B, C, D; C <= B; D <= B; X <= btw(C, D);"))
    assert ci("btw(C, D) <= B") in st.derived
    assert ci("C <= btw(C, D)") in st.derived
    steps = st.explain(ci("btw(C, D) <= B"))
    assert steps[-1].rule == "S2"
    zoo = interpolative_saturate(nt(
        "natural Rabbit, Zebra, Giraffe, Herbivore; Rabbit <= Herbivore; Giraffe <= Herbivore;"
        "Zebra <= btw(Rabbit, Giraffe);"))
    assert ci("btw(Rabbit, Giraffe) <= Herbivore") in zoo.derived
    assert ci("Zebra <= Herbivore") in zoo.derived
    empty = interpolative_saturate(normalize(TBox((), frozenset({"A"}))))
    assert empty.derived == {ci("A <= A"), ci("A <= top"), ci("top <= top")}


def test_monotone_under_more_axioms():
    rng = random.Random(24)
    for _ in range(30):
        t, names = rand_tbox(rng, n_names=4, n_cis=4)
        extra, _ = rand_tbox(rng, n_names=4, n_cis=2)
        bigger = TBox(t.statements + extra.statements, t.natural_names)
        try:
            from elbow.syntax import check_naturalness

            check_naturalness(bigger)
        except ValueError:
            continue
        for a, b in itertools.permutations(names, 2):
            if decide_subsumption(t, Name(a), Name(b), trace=False).entailed:
                assert decide_subsumption(bigger, Name(a), Name(b), trace=False).entailed
