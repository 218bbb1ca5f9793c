"""Точечный процесс: сэмплирование реконструированных деревьев и биекция с ориентированными деревьями"""

import functools
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from .data_types import (
    AgeCondition,
    BDParams,
    ConditionKind,
    OrientedNode,
    OrientedTree,
    PhyloNode,
    Phylogeny,
    PointProcess,
)
from .densities import origin_inv_cdf, spec_time_inv_cdf
from .exceptions import DomainError, StructureError
from .metrics import prom_sampled_trees_count
from .utils import make_rng, run_batched


def sample_origin_age(
    params: BDParams,
    n: int,
    rng: np.random.Generator,
    u: float | None = None,
) -> float:
    """Время происхождения из q_or(t|n) методом обратной функции

    Параметры:
    u: Заданная равномерная величина вместо случайной
    """
    if u is None:
        u = rng.random()

    return origin_inv_cdf(params, u, n)


def sample_point_process(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    rng: np.random.Generator,
) -> PointProcess:
    """n-1 высот над промежутками между листьями

    При известном возрасте (или времени, выбранном из q_or) высоты независимы
    с плотностью f(s|t). При известном mrca одна высота равна t и стоит над
    случайным промежутком, остальные n-2 независимы.
    """
    if n < 2:
        raise DomainError(f"Нужно n >= 2, получено {n}")

    match cond.kind:
        case ConditionKind.UNIFORM:
            age = sample_origin_age(params, n, rng)
            origin = AgeCondition.origin(age)
        case ConditionKind.ORIGIN:
            age = cond.age
            origin = cond
        case _:
            age = None
            origin = AgeCondition.origin(cond.age)

    size = n - 1 if cond.kind != ConditionKind.MRCA else n - 2
    heights = [spec_time_inv_cdf(params, u, origin) for u in rng.random(size)]

    if cond.kind == ConditionKind.MRCA:
        heights.insert(int(rng.integers(n - 1)), cond.age)

    return PointProcess(n=n, heights=heights, age=age)


def finalize_tree(root: OrientedNode, age: float | None) -> OrientedTree:
    """Нумерация листьев слева направо (с 1) и ранги по убыванию времени"""
    tree = OrientedTree(root=root, n=1, age=age)

    leaf_index = 0
    internal: list[tuple[int, OrientedNode]] = []

    for position, node in enumerate(tree.inorder()):
        if node.is_leaf:
            leaf_index += 1
            node.leaf_index, node.rank = leaf_index, None
        else:
            internal.append((position, node))

    internal.sort(key=lambda item: (-item[1].time, item[0]))
    for rank, (_, node) in enumerate(internal, start=1):
        node.rank = rank

    tree.n = leaf_index
    return tree


def point_process_to_tree(pp: PointProcess) -> OrientedTree:
    """Ориентированное дерево по точечному процессу (декартово дерево по максимуму)

    Самая высокая точка - корень, точки слева и справа от неё образуют левое
    и правое поддеревья. При равных высотах выше считается точка с меньшим индексом.

    Пример:
    point_process_to_tree(PointProcess(n=3, heights=[2.0, 1.0])) - листья 2 и 3
    сливаются в 1.0, затем с листом 1 в 2.0
    """
    nodes = [OrientedNode(time=height) for height in pp.heights]
    keys = [(height, -i) for i, height in enumerate(pp.heights)]
    stack: list[int] = []

    for i in range(len(nodes)):
        last = None
        while stack and keys[stack[-1]] < keys[i]:
            last = stack.pop()

        if last is not None:
            nodes[i].left = nodes[last]
        if stack:
            nodes[stack[-1]].right = nodes[i]

        stack.append(i)

    # промежуток i лежит между листьями i и i+1
    for node in nodes:
        if node.left is None:
            node.left = OrientedNode()
        if node.right is None:
            node.right = OrientedNode()

    return finalize_tree(nodes[stack[0]], pp.age)


def tree_to_point_process(tree: OrientedTree) -> PointProcess:
    """Обход в симметричном порядке: времена внутренних вершин по промежуткам"""
    heights = []
    leaves = 0

    for node in tree.inorder():
        if node.is_leaf:
            leaves += 1
            continue

        if node.left is None or node.right is None:
            raise StructureError("Внутренняя вершина ориентированного дерева должна иметь двух потомков")

        for child in (node.left, node.right):
            if not child.is_leaf and child.time >= node.time:
                raise StructureError(f"Время потомка {child.time} не меньше времени предка {node.time}")

        heights.append(node.time)

    if leaves != tree.n:
        raise StructureError(f"Ожидалось {tree.n} листьев, найдено {leaves}")

    try:
        return PointProcess(n=tree.n, heights=heights, age=tree.age)
    except ValidationError as e:
        raise StructureError(f"Некорректное дерево: {e}") from e


def label_uniformly(tree: OrientedTree, rng: np.random.Generator) -> Phylogeny:
    """Случайная равномерная разметка листьев 1..n и перевод времён в длины ветвей"""
    labels = rng.permutation(tree.n) + 1

    def convert(node: OrientedNode) -> PhyloNode:
        if node.is_leaf:
            return PhyloNode(label=str(labels[node.leaf_index - 1]), age=0.0)
        return PhyloNode(age=node.time)

    root = convert(tree.root)
    if tree.age is not None:
        root.length = tree.age - tree.root.time

    stack = [(tree.root, root)]
    while stack:
        node, phylo_node = stack.pop()
        for child in (node.left, node.right):
            if child is None:
                continue
            phylo_child = convert(child)
            phylo_child.length = node.time - phylo_child.age
            phylo_node.children.append(phylo_child)
            stack.append((child, phylo_child))

    return Phylogeny(root=root)


def ranked_oriented_code(tree: OrientedTree) -> tuple[int, ...]:
    """Класс ранжированного ориентированного дерева: ранги по промежуткам слева направо"""
    return tuple(node.rank for node in tree.internal_nodes())


def _sample_batch(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    seed: int,
    indices: Sequence[int],
) -> list[PointProcess]:
    return [sample_point_process(params, n, cond, make_rng(seed, index)) for index in indices]


def sample_trees(
    params: BDParams,
    n: int,
    cond: AgeCondition,
    seed: int,
    count: int,
    jobs: int = 1,
) -> list[OrientedTree]:
    """Пакет деревьев; дерево i строится по своему потоку (seed, i), порядок - по индексу"""
    task = functools.partial(_sample_batch, params, n, cond, seed)

    trees = []
    for pp in run_batched(task, range(count), jobs):
        trees.append(point_process_to_tree(pp))
        prom_sampled_trees_count.inc()

    return trees
