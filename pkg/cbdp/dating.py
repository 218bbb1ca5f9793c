"""Датировка вершин недатированного дерева по ожидаемым временам видообразования

Ранжированные ориентированные деревья равновероятны, поэтому ранг вершины
распределён как её позиция в случайном равномерном линейном продолжении
частичного порядка внутренних вершин (предок раньше потомка).
"""

import math
from fractions import Fraction
from typing import Sequence

from . import config
from .data_types import AgeCondition, BDParams, ConditionKind, PhyloNode, Phylogeny, RankDistribution
from .densities import kth_cdf, kth_inv_cdf
from .exceptions import DomainError, StructureError
from .moments import expected_kth_table
from .numerics import invert_monotone_cdf
from .utils import write_tsv

DEFAULT_ALPHA = float(config['DEFAULT_ALPHA'])
DEFAULT_TOL = float(config['DEFAULT_TOL'])


class _Shape:
    """Вспомогательная структура: родители, число внутренних вершин и число продолжений поддеревьев"""

    def __init__(self, phylo: Phylogeny) -> None:
        self.internal = phylo.internal_nodes()
        self.parent: dict[int, PhyloNode | None] = {id(phylo.root): None}
        self.size: dict[int, int] = {}
        self.extensions: dict[int, int] = {}

        nodes = list(phylo.root.preorder())
        if len(nodes) < 3:
            raise StructureError("Нужно дерево хотя бы с двумя листьями")

        for node in nodes:
            if node.children and len(node.children) != 2:
                raise StructureError("Датировка возможна только для бинарных деревьев")
            for child in node.children:
                self.parent[id(child)] = node

        # число линейных продолжений: size! / prod(размеров поддеревьев)
        for node in reversed(nodes):
            if node.is_leaf:
                self.size[id(node)], self.extensions[id(node)] = 0, 1
                continue

            left, right = node.children
            a, b = self.size[id(left)], self.size[id(right)]
            self.size[id(node)] = a + b + 1
            self.extensions[id(node)] = (
                self.extensions[id(left)] * self.extensions[id(right)] * math.comb(a + b, a)
            )

    @property
    def n(self) -> int:
        return len(self.internal) + 1


def _rank_counts(shape: _Shape, vertex: PhyloNode) -> list[int]:
    """counts[j] - число продолжений, в которых вершина стоит на месте j (с 1) в поддереве текущего предка"""
    counts = [0] * (shape.size[id(vertex)] + 1)
    counts[1] = shape.extensions[id(vertex)]
    node = vertex

    while (parent := shape.parent[id(node)]) is not None:
        sibling = parent.children[1] if parent.children[0] is node else parent.children[0]
        a, b = shape.size[id(node)], shape.size[id(sibling)]
        sibling_extensions = shape.extensions[id(sibling)]

        merged = [0] * (a + b + 2)
        for j in range(1, a + 1):
            if counts[j] == 0:
                continue
            for m in range(b + 1):
                merged[1 + j + m] += (
                    counts[j] * sibling_extensions
                    * math.comb(j - 1 + m, m) * math.comb(a - j + b - m, b - m)
                )

        counts = merged
        node = parent

    return counts


def rank_probabilities(shape: Phylogeny, vertex: int) -> RankDistribution:
    """Точное распределение ранга внутренней вершины (ранг 1 - корень)

    Параметры:
    shape : Бинарное корневое дерево
    vertex: Номер внутренней вершины в прямом обходе (корень - 0)

    Пример:
    у сбалансированного дерева на 4 листьях вершины-вишни имеют ранги 2 и 3
    с вероятностью 1/2
    """
    structure = _Shape(shape)

    if not 0 <= vertex < len(structure.internal):
        raise DomainError(f"Нет внутренней вершины с номером {vertex}")

    counts = _rank_counts(structure, structure.internal[vertex])
    total = structure.extensions[id(shape.root)]

    probabilities = [Fraction(counts[k], total) if k < len(counts) else Fraction(0) for k in range(1, structure.n)]
    return RankDistribution(vertex=vertex, probabilities=probabilities)


def all_rank_probabilities(shape: Phylogeny) -> list[RankDistribution]:
    return [rank_probabilities(shape, vertex) for vertex in range(len(shape.internal_nodes()))]


def date_tree(
    shape: Phylogeny,
    params: BDParams,
    cond: AgeCondition,
    tol: float = DEFAULT_TOL,
) -> Phylogeny:
    """Дерево с возрастами внутренних вершин sum_k P[rank = k] E[A^k] и длинами ветвей

    Листья получают возраст 0. При известном возрасте происхождения у корня
    появляется ветвь до момента происхождения.

    Пример:
    вишня, модель Юла с lambda = 1, равномерный априор - возраст корня 1/2
    """
    distributions = all_rank_probabilities(shape)
    n = len(distributions) + 1
    expectations = [result.value for result in expected_kth_table(params, n, cond, tol)]

    dated = shape.model_copy(deep=True)

    for node, distribution in zip(dated.internal_nodes(), distributions):
        node.age = math.fsum(
            float(p) * expectation
            for p, expectation in zip(distribution.probabilities, expectations)
        )

    for leaf in dated.leaves():
        leaf.age = 0.0

    for node in dated.root.preorder():
        for child in node.children:
            child.length = node.age - child.age

    dated.root.length = cond.age - dated.root.age if cond.kind == ConditionKind.ORIGIN else None

    return dated


def _mixture_quantile(
    params: BDParams,
    n: int,
    distribution: RankDistribution,
    cond: AgeCondition,
    target: float,
    tol: float,
) -> float:
    components = [(k, float(p)) for k, p in enumerate(distribution.probabilities, start=1) if p > 0]

    if len(components) == 1:
        return kth_inv_cdf(params, n, components[0][0], target, cond)

    bounds = [kth_inv_cdf(params, n, k, target, cond) for k, _ in components]

    def cdf(s: float) -> float:
        return math.fsum(weight * kth_cdf(params, n, k, s, cond) for k, weight in components)

    return invert_monotone_cdf(cdf, target, min(bounds), max(bounds), tol)


def vertex_age_quantiles(
    shape: Phylogeny,
    params: BDParams,
    cond: AgeCondition,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
) -> list[tuple[float, float]]:
    """Центральные alpha-интервалы возраста каждой внутренней вершины (в прямом обходе)

    Функция распределения вершины - смесь распределений A^k с весами P[rank = k].
    """
    if not 0 < alpha < 1:
        raise DomainError(f"Нужно 0 < alpha < 1, получено {alpha}")

    distributions = all_rank_probabilities(shape)
    n = len(distributions) + 1
    lower, upper = (1 - alpha) / 2, (1 + alpha) / 2

    return [
        (
            _mixture_quantile(params, n, distribution, cond, lower, tol),
            _mixture_quantile(params, n, distribution, cond, upper, tol),
        )
        for distribution in distributions
    ]


def dating_sidecar(
    dated: Phylogeny,
    intervals: Sequence[tuple[float, float]],
    invocation: Sequence[str],
    precision: int,
) -> str:
    """TSV 'vertex<TAB>age<TAB>lo<TAB>hi' по внутренним вершинам в прямом обходе"""
    rows = [
        (vertex, node.age, lo, hi)
        for vertex, (node, (lo, hi)) in enumerate(zip(dated.internal_nodes(), intervals))
    ]
    return write_tsv(["vertex", "age", "lo", "hi"], rows, invocation, precision)
