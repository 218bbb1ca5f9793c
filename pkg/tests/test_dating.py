import math
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

import pytest

from cbdp.data_types import AgeCondition, BDParams, Phylogeny
from cbdp.dating import (
    all_rank_probabilities,
    date_tree,
    dating_sidecar,
    rank_probabilities,
    vertex_age_quantiles,
)
from cbdp.densities import kth_cdf_uniform_prior
from cbdp.exceptions import DomainError, StructureError
from cbdp.moments import expected_kth_table
from cbdp.phylo import parse_newick


@lru_cache(maxsize=None)
def _shapes(leaves: int) -> tuple[str, ...]:
    """Все неразмеченные бинарные формы с данным числом листьев"""
    if leaves == 1:
        return ("x",)

    shapes = []
    for left in range(1, leaves // 2 + 1):
        right = leaves - left
        for i, a in enumerate(_shapes(left)):
            for j, b in enumerate(_shapes(right)):
                if left == right and j < i:
                    continue
                shapes.append(f"({a},{b})")

    return tuple(shapes)


def _brute_force_ranks(shape: Phylogeny) -> list[list[Fraction]]:
    internal = shape.internal_nodes()
    index = {id(node): i for i, node in enumerate(internal)}
    parent = {}
    for node in internal:
        for child in node.children:
            if not child.is_leaf:
                parent[index[id(child)]] = index[id(node)]

    counts = [[0] * len(internal) for _ in internal]
    total = 0

    for order in permutations(range(len(internal))):
        position = {vertex: rank for rank, vertex in enumerate(order)}
        if all(position[parent[v]] < position[v] for v in parent):
            total += 1
            for vertex, rank in position.items():
                counts[vertex][rank] += 1

    return [[Fraction(c, total) for c in row] for row in counts]


ALL_SHAPES = [shape for leaves in range(2, 8) for shape in _shapes(leaves)]


def test_shape_counts():
    assert [len(_shapes(n)) for n in range(1, 8)] == [1, 1, 1, 2, 3, 6, 11]


@pytest.mark.parametrize("text", ALL_SHAPES)
def test_rank_probabilities_match_enumeration(text):
    shape = parse_newick(text + ";")
    expected = _brute_force_ranks(shape)

    for vertex, distribution in enumerate(all_rank_probabilities(shape)):
        assert distribution.vertex == vertex
        assert distribution.probabilities == expected[vertex]
        assert sum(distribution.probabilities) == 1


def test_rank_examples(balanced, caterpillar):
    assert rank_probabilities(balanced, 0).probabilities == [1, 0, 0]
    assert rank_probabilities(balanced, 1).probabilities == [0, Fraction(1, 2), Fraction(1, 2)]
    assert rank_probabilities(balanced, 2).probabilities == [0, Fraction(1, 2), Fraction(1, 2)]

    four = parse_newick("(((A,B),C),D);")
    assert [d.probabilities for d in all_rank_probabilities(four)] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def test_rank_errors(balanced):
    with pytest.raises(DomainError):
        rank_probabilities(balanced, 3)

    with pytest.raises(StructureError):
        rank_probabilities(parse_newick("(A,B,C);"), 0)

    with pytest.raises(StructureError):
        rank_probabilities(parse_newick("A;"), 0)


def test_date_cherry(cherry, yule, prior):
    dated = date_tree(cherry, yule, prior)

    assert dated.root.age == pytest.approx(0.5)
    assert [leaf.length for leaf in dated.leaves()] == pytest.approx([0.5, 0.5])
    assert dated.root.length is None
    assert cherry.root.age is None


def test_date_caterpillar_critical(caterpillar, critical, prior):
    dated = date_tree(caterpillar, critical, prior)
    assert [node.age for node in dated.internal_nodes()] == pytest.approx([2.0, 0.5])


def test_date_balanced_yule(balanced, yule, prior):
    dated = date_tree(balanced, yule, prior)
    expected_cherry = Fraction(1, 2) * Fraction(7, 12) + Fraction(1, 2) * Fraction(1, 4)

    assert expected_cherry == Fraction(5, 12)
    assert dated.root.age == pytest.approx(13 / 12, abs=1e-12)
    assert [node.age for node in dated.internal_nodes()[1:]] == pytest.approx([5 / 12, 5 / 12], abs=1e-12)


def test_date_with_origin(balanced, birth_death):
    dated = date_tree(balanced, birth_death, AgeCondition.origin(3.0))

    assert dated.root.length == pytest.approx(3.0 - dated.root.age)
    assert dated.root.age == pytest.approx(expected_kth_table(birth_death, 4, AgeCondition.origin(3.0))[0].value)


@pytest.mark.parametrize("params", [BDParams(lam=1.0), BDParams(lam=1.0, mu=0.5), BDParams(lam=1.0, mu=1.0)])
@pytest.mark.parametrize("text", [shape for shape in ALL_SHAPES if shape.count("x") >= 5])
def test_dated_ages_are_monotone(params, prior, text):
    dated = date_tree(parse_newick(text + ";"), params, prior)

    for node in dated.root.preorder():
        for child in node.children:
            assert child.length > 0


def test_quantiles_cherry(cherry, yule, prior):
    [(lo, hi)] = vertex_age_quantiles(cherry, yule, prior, alpha=0.95)

    # A^1 для n = 2 и lambda = 1 - экспоненциальное с интенсивностью 2
    assert lo == pytest.approx(-math.log(0.975) / 2, rel=1e-9)
    assert hi == pytest.approx(-math.log(0.025) / 2, rel=1e-9)


def test_quantiles_mixture(balanced, yule, prior):
    dated = date_tree(balanced, yule, prior)
    intervals = vertex_age_quantiles(balanced, yule, prior, alpha=0.9)

    for node, (lo, hi) in zip(dated.internal_nodes(), intervals):
        assert lo < node.age < hi

    lo, hi = intervals[1]
    mixture = 0.5 * kth_cdf_uniform_prior(yule, 4, 2, lo) + 0.5 * kth_cdf_uniform_prior(yule, 4, 3, lo)
    assert mixture == pytest.approx(0.05, abs=1e-9)


def test_quantiles_bad_alpha(cherry, yule, prior):
    with pytest.raises(DomainError):
        vertex_age_quantiles(cherry, yule, prior, alpha=1.0)


def test_sidecar(balanced, yule, prior):
    dated = date_tree(balanced, yule, prior)
    intervals = vertex_age_quantiles(balanced, yule, prior)
    lines = dating_sidecar(dated, intervals, ["date"], 12).splitlines()

    assert lines[0].startswith("# cbdp ")
    assert lines[1] == "vertex\tage\tlo\thi"
    assert len(lines) == 5
    assert lines[2].split("\t")[0] == "0"
