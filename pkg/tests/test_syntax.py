import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elbow.syntax import (
    BOTTOM,
    TOP,
    Between,
    ConceptInclusion,
    Conj,
    Exists,
    Name,
    NaturalnessError,
    NonInterference,
    SyntaxProblem,
    TBox,
    check_naturalness,
    is_natural,
    parse_concept,
    parse_tbox,
    render_concept,
    render_tbox,
    subconcepts,
)

from randgen import rand_tbox

ZOO = """
natural Rabbit, Zebra, Giraffe, Herbivore;
Rabbit <= Herbivore;
Giraffe <= Herbivore;
Zebra <= btw(Rabbit, Giraffe);
Herbivore <= some eats. Plant;
"""


def test_single_statement():
    t = parse_tbox("natural H; A <= H;")
    assert t.statements == (ConceptInclusion(Name("A"), Name("H")),)
    assert t.natural_names == {"H"}


def test_zoo_parses_to_four_inclusions():
    t = parse_tbox(ZOO)
    assert len(t.inclusions) == 4
    assert ConceptInclusion(Name("Zebra"), Between(Name("Rabbit"), Name("Giraffe"))) in t.inclusions
    assert t.concept_names == {"Rabbit", "Zebra", "Giraffe", "Herbivore", "Plant"}
    assert t.role_names == {"eats"}


def test_btw_of_non_natural_is_a_semantic_error():
    with pytest.raises(NaturalnessError):
        parse_tbox("natural C; A <= btw(A, C);")


def test_ni_needs_natural_guard_and_operands():
    parse_tbox("natural A, C, D; ni(A; C, D);")
    with pytest.raises(NaturalnessError):
        parse_tbox("natural C, D; ni(A; C, D);")
    with pytest.raises(NaturalnessError):
        parse_tbox("natural A, C; ni(A; C, D);")


@pytest.mark.parametrize(
    "text, line, col",
    [("A <= ;", 1, 6), ("natural A;\nA <= B", 2, 7), ("A <= btw(B C);", 1, 12), ("A => B;", 1, 3)],
)
def test_syntax_errors_carry_positions(text, line, col):
    with pytest.raises(SyntaxProblem) as e:
        parse_tbox(text)
    assert (e.value.line, e.value.column) == (line, col)


def test_render_empty_and_examples():
    assert render_tbox(TBox()) == ""
    assert "Zebra <= btw(Rabbit, Giraffe);" in render_tbox(parse_tbox(ZOO))
    t = parse_tbox("natural A, C, D; ni(A; C, D);")
    assert "ni(A; C, D);" in render_tbox(t)


def test_some_extends_to_the_right():
    assert parse_concept("some r. A & B") == Exists("r", Conj(Name("A"), Name("B")))
    assert parse_concept("(some r. A) & B") == Conj(Exists("r", Name("A")), Name("B"))


def test_comments_and_top():
    t = parse_tbox("# nothing here\ntop <= A; # trailing\n")
    assert t.inclusions[0].lhs == TOP


def test_subconcepts():
    sub = subconcepts(parse_tbox(ZOO))
    assert Between(Name("Rabbit"), Name("Giraffe")) in sub
    assert subconcepts(parse_tbox("A <= B;")) == {TOP, BOTTOM, Name("A"), Name("B")}
    assert Conj(Name("A"), Name("B")) in subconcepts(parse_tbox("A & B <= C;"))


def test_subconcepts_monotone_and_linear():
    rng = random.Random(5)
    for _ in range(100):
        t1, _ = rand_tbox(rng)
        t2, _ = rand_tbox(rng)
        assert subconcepts(t1) <= subconcepts(t1.union(t2))
        assert len(subconcepts(t1)) <= 2 + t1.size()


def test_render_concept_parenthesises_where_needed():
    c = Conj(Exists("r", Name("A")), Conj(Name("B"), Name("C")))
    assert parse_concept(render_concept(c)) == c


def test_random_round_trip_and_naturalness():
    rng = random.Random(11)
    for _ in range(300):
        t, _ = rand_tbox(rng, n_names=6, n_cis=8, n_btw=3, roles=("r", "s"))
        t = t.with_statements(())
        assert parse_tbox(render_tbox(t)) == t
        for ci in t.inclusions:
            for c in (ci.lhs, ci.rhs):
                _check_btw_operands(c, t.natural_names)


def _natural_by_hand(c, nat):
    if isinstance(c, Name):
        return c.name in nat
    if isinstance(c, (Conj, Between)):
        return _natural_by_hand(c.left, nat) and _natural_by_hand(c.right, nat)
    return False


def _check_btw_operands(c, nat):
    if isinstance(c, Between):
        assert _natural_by_hand(c.left, nat) and _natural_by_hand(c.right, nat)
    for child in getattr(c, "left", None), getattr(c, "right", None), getattr(c, "filler", None):
        if child is not None:
            _check_btw_operands(child, nat)


names = st.sampled_from(["A", "B", "C", "N1", "N2"])
nat_names = st.sampled_from(["N1", "N2", "N3"])
natural = st.recursive(
    nat_names.map(Name),
    lambda ch: st.builds(Conj, ch, ch) | st.builds(Between, ch, ch),
    max_leaves=4,
)
concepts = st.recursive(
    names.map(Name) | st.just(TOP) | natural,
    lambda ch: st.builds(Conj, ch, ch) | st.builds(Exists, st.sampled_from(["r", "s"]), ch),
    max_leaves=6,
)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.builds(ConceptInclusion, concepts, concepts), max_size=5),
       st.lists(st.builds(NonInterference, natural, nat_names, nat_names), max_size=2))
def test_round_trip_property(cis, nis):
    t = TBox(tuple(cis) + tuple(nis), frozenset({"N1", "N2", "N3"}))
    check_naturalness(t)
    assert parse_tbox(render_tbox(t)) == t


@given(natural)
def test_generated_natural_concepts_are_natural(c):
    assert is_natural(c, {"N1", "N2", "N3"})
