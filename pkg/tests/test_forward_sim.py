from collections import Counter

import numpy as np
import pytest
from prometheus_client import REGISTRY
from scipy import stats

from cbdp.bd_core import transition_probability
from cbdp.data_types import AgeCondition, BDParams, CompleteNode, CompleteTree
from cbdp.exceptions import CapacityError, DomainError, SamplingError
from cbdp.forward_sim import (
    prune_to_reconstructed,
    rejection_sample_conditioned,
    simulate_batch,
    simulate_complete,
)
from cbdp.pointproc import ranked_oriented_code, sample_trees, tree_to_point_process

ALPHA = 0.01


def test_zero_time(birth_death, rng):
    ct = simulate_complete(birth_death, 0.0, rng)
    assert ct.events == 0
    assert ct.extant_count() == 1

    with pytest.raises(DomainError):
        simulate_complete(birth_death, -1.0, rng)


def test_event_cap(yule, rng):
    with pytest.raises(CapacityError):
        simulate_complete(yule, 10.0, rng, event_cap=5)


def test_lineage_cap(yule, rng):
    with pytest.raises(CapacityError):
        simulate_complete(yule, 10.0, rng, lineage_cap=20)


def test_pure_death_extinction(rng):
    params = BDParams(lam=1e-9, mu=1e-9)
    ct = simulate_complete(params, 1.0, rng)
    assert ct.extant_count() == 1

    extinct = CompleteTree(
        root=CompleteNode(start=2.0, end=1.0, children=[
            CompleteNode(start=1.0, end=0.5, extinct=True),
            CompleteNode(start=1.0, end=0.2, extinct=True),
        ]),
        origin=2.0,
    )
    assert prune_to_reconstructed(extinct, rng) is None


def test_prune_removes_extinct_lineages(rng):
    ct = CompleteTree(
        root=CompleteNode(start=3.0, end=2.0, children=[
            CompleteNode(start=2.0),
            CompleteNode(start=2.0, end=1.0, children=[
                CompleteNode(start=1.0, end=0.4, extinct=True),
                CompleteNode(start=1.0),
            ]),
        ]),
        origin=3.0,
    )
    tree = prune_to_reconstructed(ct, rng)

    assert tree.n == 2
    assert tree.age == 3.0
    assert tree.root.time == 2.0
    assert tree.root.left.is_leaf and tree.root.right.is_leaf


def test_rejection_sampler_conditions(birth_death, rng):
    tree = rejection_sample_conditioned(birth_death, 3, AgeCondition.origin(1.0), rng)
    assert tree.n == 3
    assert tree.age == 1.0

    tree = rejection_sample_conditioned(birth_death, 3, AgeCondition.mrca(1.0), rng)
    assert tree.root.time == 1.0
    assert tree.age is None

    tree = rejection_sample_conditioned(birth_death, 3, AgeCondition.uniform_prior(), rng)
    assert tree.n == 3 and tree.age > tree.root.time


def test_rejection_sampler_gives_up(birth_death, rng):
    with pytest.raises(SamplingError) as info:
        rejection_sample_conditioned(birth_death, 50, AgeCondition.origin(0.01), rng, max_attempts=20)

    assert info.value.attempts == 20
    assert info.value.statistics["size"] == 20


def test_simulate_batch_reproducible(birth_death):
    cond = AgeCondition.origin(1.5)
    first = simulate_batch(birth_death, 3, cond, 17, 10)
    second = simulate_batch(birth_death, 3, cond, 17, 10)

    assert [tree_to_point_process(t) for t in first] == [tree_to_point_process(t) for t in second]


@pytest.mark.slow
def test_oracle_matches_point_process():
    """Эталон и точечный процесс дают одно распределение времён и ранжированных форм"""
    params, n, count = BDParams(lam=1.0, mu=0.5), 4, 10_000
    cond = AgeCondition.origin(2.0)

    oracle = simulate_batch(params, n, cond, 1, count, jobs=2)
    fast = sample_trees(params, n, cond, 2, count)

    for k in range(n - 1):
        oracle_times = [sorted(tree_to_point_process(t).heights, reverse=True)[k] for t in oracle]
        fast_times = [sorted(tree_to_point_process(t).heights, reverse=True)[k] for t in fast]
        assert stats.ks_2samp(oracle_times, fast_times).pvalue > ALPHA

    counts = Counter(ranked_oriented_code(tree) for tree in oracle)
    assert len(counts) == 6
    assert stats.chisquare(list(counts.values())).pvalue > ALPHA


def test_oracle_mrca_root_time():
    params = BDParams(lam=1.0, mu=0.3)
    trees = simulate_batch(params, 3, AgeCondition.mrca(1.0), 4, 200)
    assert np.all([tree.root.time == 1.0 for tree in trees])


def test_extant_counts_follow_transition_probability(birth_death, rng):
    t, count, top = 1.0, 4000, 6
    extant = np.array([simulate_complete(birth_death, t, rng).extant_count() for _ in range(count)])

    extinct = int(np.sum(extant == 0))
    assert stats.binomtest(extinct, count, transition_probability(birth_death, 0, t)).pvalue > ALPHA

    probabilities = [transition_probability(birth_death, size, t) for size in range(top)]
    probabilities.append(1 - sum(probabilities))
    observed = [int(np.sum(extant == size)) for size in range(top)] + [int(np.sum(extant >= top))]

    assert stats.chisquare(observed, np.array(probabilities) * count).pvalue > ALPHA


def test_acceptance_rate(birth_death, rng):
    n, t, count = 2, 1.0, 2000
    attempts_before = REGISTRY.get_sample_value("oracle_attempts_total")

    for _ in range(count):
        rejection_sample_conditioned(birth_death, n, AgeCondition.origin(t), rng)

    attempts = REGISTRY.get_sample_value("oracle_attempts_total") - attempts_before
    rejected = int(attempts) - count
    accepted = stats.nbinom(count, transition_probability(birth_death, n, t))

    assert 2 * min(accepted.cdf(rejected), accepted.sf(rejected - 1)) > ALPHA
