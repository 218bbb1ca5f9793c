"""Прямая симуляция процесса рождения-гибели - эталон для проверки сэмплера

Время отсчитывается назад от настоящего: происхождение в t_or, сегодня - 0.
"""

import functools
from collections import Counter
from typing import Sequence

import numpy as np
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from . import config
from .data_types import (
    AgeCondition,
    BDParams,
    CompleteNode,
    CompleteTree,
    ConditionKind,
    OrientedNode,
    OrientedTree,
    PointProcess,
)
from .exceptions import CapacityError, DomainError, SamplingError
from .metrics import (
    prom_oracle_accepted_count,
    prom_oracle_attempts_count,
    prom_oracle_capacity_count,
)
from .pointproc import finalize_tree, point_process_to_tree, tree_to_point_process
from .utils import make_rng, run_batched

EVENT_CAP = config['EVENT_CAP']
ORACLE_MAX_ATTEMPTS = config['ORACLE_MAX_ATTEMPTS']
ORACLE_T_MAX = float(config['ORACLE_T_MAX'])
ORACLE_LINEAGE_CAP = config['ORACLE_LINEAGE_CAP']


class Rejected(Exception):
    """Попытка не дала нужного дерева"""


def simulate_complete(
    params: BDParams,
    t_or: float,
    rng: np.random.Generator,
    lineages: int = 1,
    event_cap: int = EVENT_CAP,
    lineage_cap: int | None = None,
) -> CompleteTree:
    """Точная симуляция (алгоритм Гиллеспи) полного дерева от t_or до настоящего

    Параметры:
    lineages   : 1 - одна линия от происхождения, 2 - две линии от mrca в t_or
    event_cap  : Лимит событий рождения и гибели
    lineage_cap: Лимит одновременно живущих линий
    """
    if not t_or >= 0:
        raise DomainError(f"Время происхождения должно быть неотрицательным: {t_or}")

    if lineages == 1:
        root = CompleteNode(start=t_or)
        active = [root]
    else:
        root = CompleteNode(start=t_or, end=t_or)
        root.children = [CompleteNode(start=t_or), CompleteNode(start=t_or)]
        active = list(root.children)

    total_rate = params.lam + params.mu
    birth_share = params.lam / total_rate
    now = t_or
    events = 0

    while active:
        now -= rng.exponential(1 / (total_rate * len(active)))
        if now <= 0:
            break

        events += 1
        if events > event_cap:
            raise CapacityError(events, event_cap)

        index = int(rng.integers(len(active)))
        node = active[index]
        node.end = now

        if rng.random() < birth_share:
            node.children = [CompleteNode(start=now), CompleteNode(start=now)]
            active[index] = node.children[0]
            active.append(node.children[1])

            if lineage_cap is not None and len(active) > lineage_cap:
                raise CapacityError(len(active), lineage_cap)
        else:
            node.extinct = True
            active[index] = active[-1]
            active.pop()

    return CompleteTree(root=root, origin=t_or, events=events, mrca_rooted=lineages == 2)


def prune_to_reconstructed(ct: CompleteTree, rng: np.random.Generator) -> OrientedTree | None:
    """Реконструированное дерево: удаление вымерших линий и вершин степени 2

    Порядок потомков каждой сохранившейся вершины выбирается заново случайно.
    Если выживших нет, возвращается None.
    """
    reduced: dict[int, OrientedNode | None] = {}
    stack: list[tuple[CompleteNode, bool]] = [(ct.root, False)]

    while stack:
        node, visited = stack.pop()

        if not node.children:
            reduced[id(node)] = None if node.extinct else OrientedNode()
            continue

        if not visited:
            stack.append((node, True))
            stack.extend((child, False) for child in node.children)
            continue

        survivors = [reduced[id(child)] for child in node.children if reduced[id(child)] is not None]

        if len(survivors) < 2:
            reduced[id(node)] = survivors[0] if survivors else None
            continue

        left, right = survivors
        if rng.random() < 0.5:
            left, right = right, left
        reduced[id(node)] = OrientedNode(time=node.end, left=left, right=right)

    root = reduced[id(ct.root)]
    if root is None:
        return None

    return finalize_tree(root, None if ct.mrca_rooted else ct.origin)


def rejection_sample_conditioned(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    rng: np.random.Generator,
    max_attempts: int = ORACLE_MAX_ATTEMPTS,
) -> OrientedTree:
    """Реконструированное дерево ровно с n видами сегодня - отбраковкой прямых симуляций

    При известном mrca симуляция начинается с двух линий, и обе должны оставить
    потомков. При равномерном априоре время происхождения предлагается
    равномерно на [0, ORACLE_T_MAX / lambda].
    """
    if n < 1:
        raise DomainError(f"Нужно n >= 1, получено {n}")

    statistics: Counter[str] = Counter()
    lineage_cap = max(ORACLE_LINEAGE_CAP, 2 * n)

    def attempt() -> OrientedTree:
        prom_oracle_attempts_count.inc()

        match cond.kind:
            case ConditionKind.UNIFORM:
                t, lineages = rng.uniform(0, ORACLE_T_MAX / params.lam), 1
            case ConditionKind.ORIGIN:
                t, lineages = cond.age, 1
            case _:
                t, lineages = cond.age, 2

        try:
            ct = simulate_complete(params, t, rng, lineages, lineage_cap=lineage_cap)
        except CapacityError:
            prom_oracle_capacity_count.inc()
            statistics["capacity"] += 1
            raise Rejected

        if ct.extant_count() != n:
            statistics["size"] += 1
            raise Rejected

        tree = prune_to_reconstructed(ct, rng)

        if lineages == 2 and (tree.root.is_leaf or tree.root.time != t):
            statistics["mrca"] += 1
            raise Rejected

        return tree

    retrying = Retrying(
        stop=stop_after_attempt(max_attempts),
        retry=retry_if_exception_type(Rejected),
    )

    try:
        tree = retrying(attempt)
    except RetryError as e:
        raise SamplingError(max_attempts, dict(statistics)) from e

    prom_oracle_accepted_count.inc()
    return tree


def _simulate_batch(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    seed: int,
    max_attempts: int,
    indices: Sequence[int],
) -> list[PointProcess]:
    return [
        tree_to_point_process(
            rejection_sample_conditioned(params, n, cond, make_rng(seed, index), max_attempts)
        )
        for index in indices
    ]


def simulate_batch(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    seed: int,
    count: int,
    jobs: int = 1,
    max_attempts: int = ORACLE_MAX_ATTEMPTS,
) -> list[OrientedTree]:
    """Пакет деревьев эталонного сэмплера (n >= 2); порядок - по индексу дерева"""
    if n < 2:
        raise DomainError(f"Нужно n >= 2, получено {n}")

    task = functools.partial(_simulate_batch, params, n, cond, seed, max_attempts)
    return [point_process_to_tree(pp) for pp in run_batched(task, range(count), jobs)]
