"""Finite abelian groups: enumeration counts, formulas, text forms."""

import itertools
import random
from math import gcd, prod

import pytest

from cokpairs.errors import BudgetExceeded
from cokpairs.groups import (
    FinAbGroup,
    GroupElement,
    GroupHom,
    aut_order,
    construction_sizes,
    enumerate_automorphisms,
    enumerate_homs,
    enumerate_surjections,
    hom_count,
    identity_hom,
    parse_group,
    subgroup_order,
    tensor_with_cyclic,
)


def G(*orders):
    return FinAbGroup.from_orders(orders)


def test_hom_count_examples():
    assert sum(1 for _ in enumerate_homs(G(2), G(2))) == 2
    assert sum(1 for _ in enumerate_homs(G(4), G(2))) == 2
    assert sum(1 for _ in enumerate_homs(G(2, 2), G(2))) == 4


def test_surjection_examples():
    assert sum(1 for _ in enumerate_surjections(G(3), G(3))) == 2
    assert sum(1 for _ in enumerate_surjections(G(2), G(4))) == 0
    assert sum(1 for _ in enumerate_surjections(G(2, 2), G(2))) == 3


def test_automorphism_examples():
    assert aut_order(G(2)) == 1
    assert aut_order(G(3)) == 2
    assert aut_order(G(2, 2)) == 6  # GL_2(F_2)


def test_hom_count_formula_matches_enumeration():
    pool = [
        G(),
        G(2),
        G(3),
        G(4),
        G(2, 2),
        G(6),
        G(8),
        G(2, 4),
        G(9),
        G(3, 3),
        G(12),
        G(2, 2, 2),
    ]
    for a in pool:
        for b in pool:
            expected = hom_count(a, b)
            assert expected == prod(
                gcd(oa, ob) for oa in a.generator_orders for ob in b.generator_orders
            )
            if expected <= 5000:
                assert sum(1 for _ in enumerate_homs(a, b)) == expected


def test_budget_exceeded():
    big = G(*([2] * 6))
    with pytest.raises(BudgetExceeded):
        list(enumerate_homs(big, big, budget=1000))


def all_elements(g: FinAbGroup):
    for coords in itertools.product(*[range(o) for o in g.generator_orders]):
        yield GroupElement(g, coords)


def enumerate_subgroups(g: FinAbGroup):
    """All subgroups as frozensets of coordinate tuples (closure BFS)."""
    zero = (0,) * g.rank
    elements = list(all_elements(g))

    def close(base, extra):
        new = set(base)
        stack = [extra]
        while stack:
            c = stack.pop()
            if c in new:
                continue
            new.add(c)
            for d in list(new):
                s = GroupElement(g, tuple(x + y for x, y in zip(c, d))).coords
                if s not in new:
                    stack.append(s)
        return frozenset(new)

    seen = {frozenset({zero})}
    frontier = [frozenset({zero})]
    out = []
    while frontier:
        sub = frontier.pop()
        out.append(sub)
        for el in elements:
            if el.coords not in sub:
                key = close(sub, el.coords)
                if key not in seen:
                    seen.add(key)
                    frontier.append(key)
    return out


def test_surjections_by_inclusion_exclusion():
    """#Sur(A, B) from Moebius inversion over the subgroup lattice of B."""
    cases = [
        (G(4), G(2)),
        (G(2, 2), G(2)),
        (G(4, 2), G(2, 2)),
        (G(8), G(4)),
        (G(2, 2, 2), G(2, 2)),
        (G(9), G(3)),
        (G(3, 3), G(3, 3)),
        (G(12), G(6)),
        (G(16, 2), G(4, 2)),
        (G(4, 4), G(4, 2)),
    ]
    for a, b in cases:
        subs = enumerate_subgroups(b)
        full = max(subs, key=len)
        assert len(full) == b.order
        mu = {full: 1}
        for h in sorted(subs, key=len, reverse=True):
            if h not in mu:
                mu[h] = -sum(mu[k] for k in subs if h < k)
        # Hom(A, H) counts images landing inside H, generator by generator
        def homs_into(h):
            return prod(
                sum(1 for coords in h if GroupElement(b, coords).scale(oa).is_zero())
                for oa in a.generator_orders
            )

        expected = sum(mu[h] * homs_into(h) for h in subs)
        direct = sum(1 for _ in enumerate_surjections(a, b))
        assert direct == expected, (a.text(), b.text(), direct, expected)


def test_automorphisms_closed_under_composition():
    rng = random.Random(12)
    for g in (G(4), G(2, 2), G(3, 3), G(4, 2)):
        auts = list(enumerate_automorphisms(g))
        mats = {a.matrix() for a in auts}
        for _ in range(20):
            f1 = rng.choice(auts)
            f2 = rng.choice(auts)
            assert f1.compose(f2).matrix() in mats


def test_construction_sizes():
    p = 5
    assert construction_sizes(G(p)) == (p, p, 1)
    assert construction_sizes(G(2, 2)) == (8, 8, 2)
    assert construction_sizes(FinAbGroup.trivial()) == (1, 1, 1)
    # mixed primes multiply
    s2, s2u, w2 = construction_sizes(G(2, 2))
    s3, s3u, w3 = construction_sizes(G(3))
    assert construction_sizes(G(2, 2, 3)) == (s2 * s3, s2u * s3u, w2 * w3)


def test_sym2_size_matches_pairing_count():
    """|Sym_2 G| equals the number of symmetric pairing Grams on G."""
    from cokpairs.pairings import _enumerate_blocks

    for g in (G(2), G(4), G(2, 2), G(4, 2), G(9), G(3, 3)):
        total = 1
        for p, lam in g.types:
            total *= sum(1 for _ in _enumerate_blocks(p, lam))
        assert total == construction_sizes(g)[0]


def test_tensor_with_cyclic():
    assert tensor_with_cyclic(G(4), 2).text() == "Z/2"
    assert tensor_with_cyclic(G(3), 2).order == 1
    assert tensor_with_cyclic(G(12, 2), 4).text() == "Z/4+Z/2"


def test_text_roundtrip_and_normalization():
    g = parse_group("Z/2+Z/4+Z/3")
    assert g.text() == "Z/4+Z/2+Z/3"
    assert parse_group(g.text()) == g
    assert parse_group("Z/6").text() == "Z/2+Z/3"
    assert parse_group("1") == FinAbGroup.trivial()


def test_element_arithmetic():
    g = G(4, 3)
    x = g.element((3, 2))
    assert (x + x).coords == (2, 1)
    assert (-x).coords == (1, 1)
    assert x.scale(12).is_zero()
    assert x.order() == 12


def test_hom_well_definedness_rejected():
    g = G(4)
    h = G(8)
    with pytest.raises(ValueError):
        GroupHom(g, h, (h.element((1,)),))  # 4 * 1 != 0 in Z/8


def test_identity_and_apply():
    g = G(4, 2)
    i = identity_hom(g)
    x = g.element((3, 1))
    assert i.apply(x) == x
    assert i.is_automorphism()


def test_subgroup_order():
    g = G(4, 2)
    assert subgroup_order(g, [g.element((1, 0))]) == 4
    assert subgroup_order(g, [g.element((2, 1))]) == 2
    assert subgroup_order(g, [g.element((1, 0)), g.element((0, 1))]) == 8
    assert subgroup_order(g, []) == 1


def test_cyclic_prime_power_aut_order():
    """|Aut(Z/p^k)| = p^k - p^(k-1)."""
    assert aut_order(G(8)) == 4
    assert aut_order(G(16)) == 8
    assert aut_order(G(9)) == 6
    assert aut_order(G(27)) == 18
