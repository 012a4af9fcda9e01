import random

from elbow.gcpnet import (
    build_hardness_model,
    dominates,
    random_consistent_net,
    reduce_to_tbox,
    target_ci,
    verify_reduction,
)
from elbow.geo_reasoner import Derivable, GeoFactBase, Unknown, entails_geo_sound, saturate_geo
from elbow.syntax import TBox, parse_concept, parse_tbox
from elbow.syntax import ConceptInclusion as CI


def c(text):
    lhs, rhs = text.split("<=")
    return CI(parse_concept(lhs), parse_concept(rhs))


def test_interpolation_under_non_interference():
    t = parse_tbox("natural A, B, C, D; ni(A; C, D); A & C <= B; D <= B;")
    res = entails_geo_sound(t, c("A & btw(C, D) <= B"))
    assert isinstance(res, Derivable)
    assert res.trace[-1].rule == "guarded-btw"
    assert res.trace[-1].premises == ("ni(A; C, D)", "A & C <= B", "D <= B")


def test_without_non_interference_nothing_follows():
    t = parse_tbox("natural A, B, C, D; A & C <= B; D <= B;")
    assert not entails_geo_sound(t, c("A & btw(C, D) <= B"))


def test_mirror_and_two_sided_rules():
    t = parse_tbox("natural A, B, C, D; ni(A; D, C); A & D <= B; C <= B; X <= btw(D, C);")
    res = entails_geo_sound(t, c("A & btw(C, D) <= B"))
    assert res
    t = parse_tbox("natural A, B, C, D; ni(A; C, D); ni(A; D, C); A & C <= B; A & D <= B;")
    res = entails_geo_sound(t, c("A & btw(C, D) <= B"))
    assert res and res.trace[-1].rule == "two-sided-guarded-btw"


def test_intersection_of_guards():
    base = saturate_geo(parse_tbox("natural A, B, C, D; ni(A; C, D); ni(B; C, D);"))
    assert "ni(A & B; C, D)" in base.ni_facts


def test_empty_tbox():
    base = saturate_geo(TBox((), frozenset({"A", "B"})))
    assert base.ni_facts == frozenset()
    assert entails_geo_sound(TBox((), frozenset({"A", "B"})), c("A <= A"))
    assert isinstance(entails_geo_sound(TBox((), frozenset({"A", "B"})), c("A <= B")), Unknown)


def test_natural_interpolation():
    t = parse_tbox("natural R, G, Z, H; R <= H; G <= H; Z <= btw(R, G);")
    res = entails_geo_sound(t, c("Z <= H"))
    assert res and any(s.rule == "natural-btw" for s in res.trace)


def test_trace_premises_are_derived_earlier():
    t = parse_tbox("natural A, B, C, D, E; ni(A; C, D); A & C <= B; D <= E; E <= B;")
    res = entails_geo_sound(t, c("A & btw(C, D) <= B"))
    assert res
    seen = set(t.non_interference and ["ni(A; C, D)"])
    for step in res.trace:
        assert all(p in seen for p in step.premises), step
        seen.add(step.conclusion)


def test_reduction_two_atoms_traces_flip_sequence():
    from elbow.gcpnet import parse_gcp

    n = parse_gcp("atoms a b; top : a; a : b;")
    init = (False, False)
    t = reduce_to_tbox(n, init)
    res = entails_geo_sound(t, target_ci(n, (True, True)))
    assert res and dominates(n, init, (True, True))
    rules = [s.rule for s in res.trace]
    # one interpolation step per flip; the last flip touches every atom, so no guard is needed
    assert rules.count("guarded-btw") == 1 and rules.count("natural-btw") == 1
    assert not entails_geo_sound(t, target_ci(n, (False, True)))


def test_sound_with_respect_to_dominance():
    rng = random.Random(61)
    checked = dominated = 0
    for _ in range(40):
        m = rng.randint(1, 6)
        n = random_consistent_net(rng, m, rng.randint(1, 6))
        init = rng.choice(n.outcomes())
        t = reduce_to_tbox(n, init)
        base = GeoFactBase(t)
        model = build_hardness_model(n, init) if m <= 4 else None
        for target in rng.sample(n.outcomes(), min(6, 2 ** m)):
            if target == init:
                continue
            derived = bool(entails_geo_sound(t, target_ci(n, target), base=base))
            dom = bool(dominates(n, init, target))
            if dom:
                assert derived, (n.render(), init, target)
                dominated += 1
            elif model is not None:
                rep = verify_reduction(n, init, target, model=model, check_certificates=False)
                assert not rep.in_hull
                assert not derived, (n.render(), init, target)
            checked += 1
    assert checked > 100 and dominated > 10
