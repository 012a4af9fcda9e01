import random
from fractions import Fraction as Q

import pytest

from elbow.geometry import (
    EMPTY,
    CICertificate,
    DimensionMismatch,
    GeometricModel,
    UnsupportedRegion,
    VRegion,
    caratheodory_membership,
    check_ci,
    evaluate_membership,
    hull_coefficients,
    hull_membership,
    hull_union,
    intersect_regions,
    parse_rational,
    separating_hyperplane,
    unit,
)
from elbow.syntax import ConceptInclusion, parse_concept


def rand_point(rng, d, lo=-3, hi=3):
    return tuple(Q(rng.randint(lo * 2, hi * 2), 2) for _ in range(d))


def rand_instance(rng):
    d = rng.randint(1, 4)
    verts = tuple(rand_point(rng, d) for _ in range(rng.randint(1, 8)))
    if rng.random() < 0.5:
        ws = [rng.randint(0, 3) for _ in verts]
        if sum(ws) == 0:
            ws[0] = 1
        p = tuple(sum(Q(w, sum(ws)) * v[i] for w, v in zip(ws, verts)) for i in range(d))
    else:
        p = rand_point(rng, d)
    return p, VRegion(verts)


def test_membership_examples():
    r = VRegion(((0, 0), (2, 0), (0, 2)))
    assert hull_membership((2, 0), r)
    assert hull_membership((1, 0), r)
    assert hull_membership((1, 1), r)
    assert not hull_membership((Q(3, 2), 1), r)
    assert hull_coefficients((1, 0), VRegion(((0, 0), (2, 0)))) == [Q(1, 2), Q(1, 2)]
    with pytest.raises(DimensionMismatch):
        hull_membership((1, 2, 3), r)
    assert not hull_membership((0, 0), EMPTY)


def test_simplex_agrees_with_caratheodory():
    rng = random.Random(41)
    inside = 0
    for _ in range(400):
        p, r = rand_instance(rng)
        a = hull_membership(p, r)
        assert a == caratheodory_membership(p, r), (p, r)
        inside += a
    assert 50 < inside < 350


def test_certificates_are_exact():
    rng = random.Random(42)
    for _ in range(300):
        p, r = rand_instance(rng)
        lam = hull_coefficients(p, r)
        sep = separating_hyperplane(p, r)
        assert (lam is None) != (sep is None)
        if lam is not None:
            assert all(x >= 0 for x in lam) and sum(lam) == 1
            assert tuple(sum(l * v[i] for l, v in zip(lam, r.vertices)) for i in range(len(p))) == p
        else:
            y, t = sep
            assert all(sum(a * b for a, b in zip(y, v)) <= t for v in r.vertices)
            assert sum(a * b for a, b in zip(y, p)) >= t + 1


def test_hull_monotonicity():
    rng = random.Random(43)
    for _ in range(200):
        p, r = rand_instance(rng)
        bigger = VRegion(r.vertices + tuple(rand_point(rng, len(p)) for _ in range(2)))
        if hull_membership(p, r):
            assert hull_membership(p, bigger)


def test_simplex_face_algebra():
    d = 4
    faces = [VRegion.face(s, d) for s in ({0, 1}, {1, 2}, {0}, {1}, {0, 1, 2, 3})]
    assert intersect_regions(faces[0], faces[1]).support == {1}
    assert intersect_regions(faces[2], faces[3]).is_empty
    for a in faces:
        for b in faces:
            meet = intersect_regions(a, b)
            for i in range(d):
                e = unit(i, d)
                assert hull_membership(e, meet) == (hull_membership(e, a) and hull_membership(e, b))
    with pytest.raises(UnsupportedRegion):
        intersect_regions(VRegion(((0, 0),)), VRegion.face({0}, 2))
    with pytest.raises(ValueError):
        VRegion(((2, 0),), "simplex_face")


def test_evaluate_membership():
    m = GeometricModel(
        3,
        {"A": VRegion.face({0}, 3), "B": VRegion.face({1}, 3), "C": VRegion.face({0, 1}, 3)},
        {"r": frozenset({(unit(2, 3), unit(0, 3))})},
        frozenset({"A", "B", "C"}),
    )
    half = (Q(1, 2), Q(1, 2), 0)
    assert evaluate_membership(m, parse_concept("C"), unit(0, 3))
    assert evaluate_membership(m, parse_concept("btw(A, B)"), half)
    assert not evaluate_membership(m, parse_concept("A"), half)
    assert evaluate_membership(m, parse_concept("top"), (7, 7, 7))
    assert not evaluate_membership(m, parse_concept("C"), (2, -1, 0))
    assert evaluate_membership(m, parse_concept("some r. A"), unit(2, 3))
    assert not evaluate_membership(m, parse_concept("some r. B"), unit(2, 3))
    assert evaluate_membership(m, parse_concept("C & btw(A, B)"), half)
    for _ in range(50):
        p = rand_point(random.Random(_), 3)
        assert evaluate_membership(m, parse_concept("btw(A, B)"), p) == evaluate_membership(
            m, parse_concept("btw(B, A)"), p
        )


def test_btw_symmetry_on_general_regions():
    rng = random.Random(44)
    for _ in range(100):
        d = rng.randint(1, 3)
        a = VRegion(tuple(rand_point(rng, d) for _ in range(rng.randint(1, 4))))
        b = VRegion(tuple(rand_point(rng, d) for _ in range(rng.randint(1, 4))))
        m = GeometricModel(d, {"A": a, "B": b}, natural=frozenset({"A", "B"}))
        p = rand_point(rng, d)
        assert evaluate_membership(m, parse_concept("btw(A, B)"), p) == evaluate_membership(
            m, parse_concept("btw(B, A)"), p
        )
        assert hull_union(a, b).vertices == tuple(dict.fromkeys(a.vertices + b.vertices))


def test_check_ci():
    m = GeometricModel(2, {"A": VRegion(((0, 0), (2, 0))), "B": VRegion(((0, 0), (1, 0)))})
    bad = check_ci(m, CICertificate(ConceptInclusion(parse_concept("A"), parse_concept("B"))))
    assert not bad and bad.point == (2, 0)
    assert check_ci(m, CICertificate(ConceptInclusion(parse_concept("B"), parse_concept("A"))))
    cert = CICertificate(ConceptInclusion(parse_concept("B"), parse_concept("A")), ((0, 0), (Q(1, 2), 0)))
    assert not check_ci(m, cert)
    with pytest.raises(UnsupportedRegion):
        check_ci(m, CICertificate(ConceptInclusion(parse_concept("some r. A"), parse_concept("B"))))


def test_model_json_round_trip():
    m = GeometricModel(
        2,
        {"A": VRegion.face({0}, 2), "X": VRegion(((Q(-1), Q(2)), (Q(1, 3), 0)))},
        {"r": frozenset({((0, 1), (1, 0))})},
        frozenset({"A", "X"}),
    )
    assert GeometricModel.from_json(m.dumps()) == m
    assert parse_rational("-2/6") == Q(-1, 3)
    with pytest.raises(ValueError):
        GeometricModel.from_json('{"regions": {}}')
    with pytest.raises(ValueError):
        GeometricModel(2, {}, natural=frozenset({"A"}))
