from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cbdp.data_types import AgeCondition, BDParams, OrientedNode, OrientedTree, PointProcess
from cbdp.densities import kth_cdf_given_age, kth_cdf_uniform_prior, origin_inv_cdf
from cbdp.exceptions import DomainError, StructureError
from cbdp.pointproc import (
    label_uniformly,
    point_process_to_tree,
    ranked_oriented_code,
    sample_origin_age,
    sample_point_process,
    sample_trees,
    tree_to_point_process,
)
from cbdp.utils import make_rng

P_MIN = 1e-3


def test_cartesian_tree_example():
    tree = point_process_to_tree(PointProcess(n=3, heights=[2.0, 1.0]))

    assert tree.root.time == 2.0
    assert tree.root.left.is_leaf and tree.root.left.leaf_index == 1
    assert tree.root.right.time == 1.0
    assert [leaf.leaf_index for leaf in tree.inorder() if leaf.is_leaf] == [1, 2, 3]
    assert ranked_oriented_code(tree) == (1, 2)


def test_equal_heights_prefer_left_gap():
    tree = point_process_to_tree(PointProcess(n=3, heights=[1.0, 1.0]))
    assert tree.root.right.time == 1.0
    assert ranked_oriented_code(tree) == (1, 2)


@settings(max_examples=200)
@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=30, unique=True))
def test_point_process_bijection(heights):
    pp = PointProcess(n=len(heights) + 1, heights=heights)
    tree = point_process_to_tree(pp)

    assert tree.n == pp.n
    assert tree.root.time == max(heights)
    assert sorted(ranked_oriented_code(tree)) == list(range(1, pp.n))
    assert tree_to_point_process(tree).heights == heights


def test_malformed_tree_rejected():
    child = OrientedNode(time=2.0, left=OrientedNode(), right=OrientedNode())
    root = OrientedNode(time=1.0, left=child, right=OrientedNode())

    with pytest.raises(StructureError):
        tree_to_point_process(OrientedTree(root=root, n=3))

    with pytest.raises(StructureError):
        tree_to_point_process(OrientedTree(root=OrientedNode(time=1.0, left=OrientedNode()), n=2))


def test_sample_origin_age_with_given_u(birth_death, rng):
    assert sample_origin_age(birth_death, 4, rng, u=0.3) == origin_inv_cdf(birth_death, 0.3, 4)


def test_sample_point_process_conditions(birth_death, rng):
    pp = sample_point_process(birth_death, 6, AgeCondition.origin(2.0), rng)
    assert pp.age == 2.0
    assert all(0 < h < 2.0 for h in pp.heights)

    pp = sample_point_process(birth_death, 6, AgeCondition.mrca(2.0), rng)
    assert pp.age is None
    assert max(pp.heights) == 2.0
    assert sum(h == 2.0 for h in pp.heights) == 1

    pp = sample_point_process(birth_death, 6, AgeCondition.uniform_prior(), rng)
    assert pp.age is not None and max(pp.heights) < pp.age

    with pytest.raises(DomainError):
        sample_point_process(birth_death, 1, AgeCondition.origin(2.0), rng)


def test_label_uniformly(birth_death):
    tree = point_process_to_tree(PointProcess(n=4, heights=[0.5, 1.5, 1.0], age=2.0))
    phylo = label_uniformly(tree, make_rng(1, 0, 1))

    assert sorted(leaf.label for leaf in phylo.leaves()) == ["1", "2", "3", "4"]
    assert phylo.root.length == pytest.approx(0.5)

    for leaf in phylo.leaves():
        assert leaf.age == 0.0
    for node in phylo.root.preorder():
        for child in node.children:
            assert child.length == pytest.approx(node.age - child.age)


def test_sample_trees_reproducible(birth_death):
    cond = AgeCondition.origin(2.0)
    first = sample_trees(birth_death, 5, cond, 7, 20)
    second = sample_trees(birth_death, 5, cond, 7, 20)
    other = sample_trees(birth_death, 5, cond, 8, 20)

    assert [tree_to_point_process(t) for t in first] == [tree_to_point_process(t) for t in second]
    assert [tree_to_point_process(t) for t in first] != [tree_to_point_process(t) for t in other]


def test_sample_trees_independent_of_jobs(birth_death):
    cond = AgeCondition.uniform_prior()
    serial = sample_trees(birth_death, 4, cond, 11, 150, jobs=1)
    parallel = sample_trees(birth_death, 4, cond, 11, 150, jobs=2)

    assert [tree_to_point_process(t) for t in serial] == [tree_to_point_process(t) for t in parallel]


@pytest.mark.parametrize("params", [BDParams(lam=1.0), BDParams(lam=1.0, mu=0.5), BDParams(lam=1.0, mu=1.0)])
@pytest.mark.parametrize("k", [1, 3])
def test_order_statistics_given_age(params, k):
    n, t = 5, 2.0
    trees = sample_trees(params, n, AgeCondition.origin(t), 2024, 2000)
    times = [sorted((node.time for node in tree.internal_nodes()), reverse=True)[k - 1] for tree in trees]

    result = stats.kstest(times, lambda s: np.array([kth_cdf_given_age(params, n, k, x, t) for x in np.atleast_1d(s)]))
    assert result.pvalue > P_MIN


@pytest.mark.parametrize("params", [BDParams(lam=1.0), BDParams(lam=2.0, mu=1.0)])
def test_mrca_uniform_prior(params):
    n = 4
    trees = sample_trees(params, n, AgeCondition.uniform_prior(), 99, 2000)
    times = [tree.root.time for tree in trees]

    result = stats.kstest(times, lambda s: np.array([kth_cdf_uniform_prior(params, n, 1, x) for x in np.atleast_1d(s)]))
    assert result.pvalue > P_MIN


def test_ranked_oriented_classes_uniform(birth_death):
    trees = sample_trees(birth_death, 4, AgeCondition.origin(2.0), 5, 3000)
    counts = Counter(ranked_oriented_code(tree) for tree in trees)

    assert len(counts) == 6
    assert stats.chisquare(list(counts.values())).pvalue > P_MIN


def test_yule_reconstructed_tree_oracle(yule):
    """Модель Юла: момент (n+1)-го события - экспоненциальные интервалы с интенсивностями i lambda"""
    rng = np.random.default_rng(3)
    n = 4
    direct = [rng.exponential(1 / (n * yule.lam)) for _ in range(2000)]
    trees = sample_trees(yule, n, AgeCondition.uniform_prior(), 3, 2000)
    youngest = [min(node.time for node in tree.internal_nodes()) for tree in trees]

    assert stats.ks_2samp(direct, youngest).pvalue > P_MIN
