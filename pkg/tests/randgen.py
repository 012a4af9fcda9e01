"""Random instance generators shared by the test suites."""

import itertools

from elbow.feature_model import FeatureInterpretation
from elbow.prop_bridge import Clause
from elbow.syntax import TOP, Between, ConceptInclusion, Conj, Exists, Name, TBox


def rand_tbox(rng, n_names=5, n_cis=6, n_btw=2, roles=("r",), p_exists=0.2):
    """A random TBox over names ``A0..`` and the list of those names."""
    names = [f"A{i}" for i in range(n_names)]
    natural = frozenset(n for n in names if rng.random() < 0.6)
    nats = sorted(natural)

    def nat_concept(depth=0):
        if depth > 1 or rng.random() < 0.7:
            return Name(rng.choice(nats))
        return Conj(nat_concept(depth + 1), nat_concept(depth + 1))

    budget = [n_btw]

    def concept(depth=0):
        x = rng.random()
        if depth >= 2 or x < 0.45:
            return Name(rng.choice(names))
        if x < 0.5:
            return TOP
        if x < 0.7:
            return Conj(concept(depth + 1), concept(depth + 1))
        if x < 0.7 + p_exists:
            return Exists(rng.choice(roles), concept(depth + 1))
        if nats and budget[0] > 0:
            budget[0] -= 1
            return Between(nat_concept(), nat_concept())
        return Name(rng.choice(names))

    cis = tuple(ConceptInclusion(concept(), concept()) for _ in range(n_cis))
    return TBox(cis, natural), names


def rand_interpretation(rng, n_features=None, natural=("N0", "N1", "N2"), plain=("P0", "P1"), roles=("r",)):
    """A valid feature-enriched interpretation; natural names are feature-defined."""
    k = n_features or rng.randint(1, 4)
    feats = [f"f{i}" for i in range(1, k + 1)]
    proper = [frozenset(c) for n in range(k) for c in itertools.combinations(feats, n)]
    pi = {f"d{j}": s for j, s in enumerate(proper)}
    for j in range(rng.randint(0, 3)):
        pi[f"e{j}"] = rng.choice(proper)
    dom = sorted(pi)
    names = {}
    for a in natural:
        s = frozenset(f for f in feats if rng.random() < 0.5)
        names[a] = {d for d in dom if s <= pi[d]}
    for a in plain:
        names[a] = {d for d in dom if rng.random() < 0.4}
    role_ext = {r: {(d, e) for d in dom for e in dom if rng.random() < 0.1} for r in roles}
    return FeatureInterpretation.build(feats, pi, names, role_ext, natural)


def rand_natural_concept(rng, natural, depth=0):
    x = rng.random()
    if depth >= 2 or x < 0.5:
        return Name(rng.choice(natural))
    if x < 0.75:
        return Conj(rand_natural_concept(rng, natural, depth + 1), rand_natural_concept(rng, natural, depth + 1))
    return Between(rand_natural_concept(rng, natural, depth + 1), rand_natural_concept(rng, natural, depth + 1))


def rand_concept(rng, natural, plain, roles=("r",), depth=0):
    x = rng.random()
    if depth >= 2 or x < 0.4:
        return Name(rng.choice(list(natural) + list(plain)))
    if x < 0.45:
        return TOP
    if x < 0.65:
        return Conj(rand_concept(rng, natural, plain, roles, depth + 1), rand_concept(rng, natural, plain, roles, depth + 1))
    if x < 0.8:
        return Exists(rng.choice(roles), rand_concept(rng, natural, plain, roles, depth + 1))
    return rand_natural_concept(rng, natural, depth + 1)


def rand_clause(rng, atoms, need_negative=True, max_len=4):
    while True:
        chosen = rng.sample(atoms, rng.randint(1, min(max_len, len(atoms))))
        pos = {a for a in chosen if rng.random() < 0.5}
        neg = set(chosen) - pos
        if neg or not need_negative:
            return Clause(frozenset(pos), frozenset(neg))


def rand_clause_instance(rng, max_atoms=8, max_clauses=6):
    atoms = [f"x{i}" for i in range(1, rng.randint(2, max_atoms) + 1)]
    premises = [rand_clause(rng, atoms) for _ in range(rng.randint(0, max_clauses))]
    return premises, rand_clause(rng, atoms)


def rand_positive_instance(rng, max_atoms=7, max_clauses=6):
    """Instances where some clause is purely positive, so guarding is needed."""
    atoms = [f"x{i}" for i in range(1, rng.randint(2, max_atoms) + 1)]
    premises = [rand_clause(rng, atoms, need_negative=False) for _ in range(rng.randint(1, max_clauses))]
    if all(c.negatives for c in premises):
        premises.append(Clause(frozenset({rng.choice(atoms)}), frozenset()))
    return premises, rand_clause(rng, atoms, need_negative=False)
