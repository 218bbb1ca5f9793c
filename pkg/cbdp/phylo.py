"""Newick, ранжированные формы деревьев и кривые LTT"""

import math
import re
from typing import Sequence

from . import config
from .data_types import (
    AgeCondition,
    BDParams,
    LTTCurve,
    LTTRooting,
    OrientedNode,
    OrientedTree,
    PhyloNode,
    Phylogeny,
    RankedShapeCode,
)
from .exceptions import NewickSyntaxError, StructureError
from .moments import expected_kth_table
from .utils import format_length, write_tsv

NEWICK_PRECISION = config['NEWICK_PRECISION']
ULTRAMETRIC_TOL = 1e-9

NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
SPECIAL_CHARS = set("()[]':;,")
QUOTE_CHARS = SPECIAL_CHARS | set(" \t\r\n")


# Чтение
# ------------------
def _skip(text: str, i: int) -> int:
    """Пропуск пробелов и комментариев в квадратных скобках"""
    while i < len(text):
        if text[i].isspace():
            i += 1
        elif text[i] == "[":
            end = text.find("]", i)
            if end < 0:
                raise NewickSyntaxError("Незакрытый комментарий", i)
            i = end + 1
        else:
            break
    return i


def _read_label(text: str, i: int) -> tuple[str | None, int]:
    if i < len(text) and text[i] == "'":
        start, i = i, i + 1
        chars = []
        while True:
            if i >= len(text):
                raise NewickSyntaxError("Незакрытая кавычка", start)
            if text[i] == "'":
                if text[i + 1:i + 2] == "'":
                    chars.append("'")
                    i += 2
                    continue
                return "".join(chars), i + 1
            chars.append(text[i])
            i += 1

    start = i
    while i < len(text) and text[i] not in QUOTE_CHARS:
        i += 1

    return (text[start:i] or None), i


def _read_length(text: str, i: int) -> tuple[float, int]:
    i = _skip(text, i)
    match = NUMBER_RE.match(text, i)

    if match is None:
        raise NewickSyntaxError("Некорректная длина ветви", i)

    end = match.end()
    if end < len(text) and not (text[end] in SPECIAL_CHARS or text[end].isspace()):
        raise NewickSyntaxError("Некорректная длина ветви", i)

    return float(match.group()), end


def _parse(text: str, i: int) -> tuple[Phylogeny, int]:
    """Разбор одного дерева, начиная с позиции i; возвращает дерево и позицию после ';'"""
    root = PhyloNode()
    node = root
    stack: list[PhyloNode] = []
    opening = True

    while True:
        i = _skip(text, i)

        if opening and i < len(text) and text[i] == "(":
            child = PhyloNode()
            node.children.append(child)
            stack.append(node)
            node = child
            i += 1
            continue

        label, i = _read_label(text, i)
        if label is not None:
            node.label = label

        i = _skip(text, i)
        if i < len(text) and text[i] == ":":
            node.length, i = _read_length(text, i + 1)
            i = _skip(text, i)

        if i >= len(text):
            message = "Незакрытая скобка" if stack else "Нет завершающей ';'"
            raise NewickSyntaxError(message, i)

        match text[i]:
            case ",":
                if not stack:
                    raise NewickSyntaxError("Запятая вне скобок", i)
                node = PhyloNode()
                stack[-1].children.append(node)
                opening = True
            case ")":
                if not stack:
                    raise NewickSyntaxError("Лишняя закрывающая скобка", i)
                node = stack.pop()
                opening = False
            case ";":
                if stack:
                    raise NewickSyntaxError("Незакрытая скобка", i)
                return Phylogeny(root=root), i + 1
            case _:
                raise NewickSyntaxError(f"Неожиданный символ {text[i]!r}", i)

        i += 1


def parse_newick(text: str) -> Phylogeny:
    """Разбор одного дерева Newick, завершённого ';'

    Поддерживаются метки (в том числе в кавычках), длины ветвей и комментарии
    в квадратных скобках. Бинарность не проверяется.

    Пример:
    parse_newick("(A:1,B:1);") - вишня с ветвями длины 1
    parse_newick("(A:1,B:1") - NewickSyntaxError с позицией 8
    """
    phylo, end = _parse(text, 0)

    end = _skip(text, end)
    if end != len(text):
        raise NewickSyntaxError("Лишние символы после ';'", end)

    return phylo


def parse_newick_many(text: str) -> list[Phylogeny]:
    """Все деревья из текста (обычно по одному на строку)"""
    trees = []
    i = _skip(text, 0)

    while i < len(text):
        phylo, i = _parse(text, i)
        trees.append(phylo)
        i = _skip(text, i)

    return trees


# Запись
# ------------------
def _quote(label: str) -> str:
    if label and not any(c in QUOTE_CHARS for c in label):
        return label
    return "'" + label.replace("'", "''") + "'"


def write_newick(phylo: Phylogeny, precision: int = NEWICK_PRECISION) -> str:
    """Newick с длинами ветвей, округлёнными до precision знаков после запятой

    Пример:
    write_newick(parse_newick("(A:1,B:1);")) == "(A:1,B:1);"
    """

    def suffix(node: PhyloNode) -> str:
        text = _quote(node.label) if node.label is not None else ""
        if node.length is not None:
            text += ":" + format_length(node.length, precision)
        return text

    out: list[str] = []
    stack: list[PhyloNode | str] = [phylo.root]

    while stack:
        item = stack.pop()

        if isinstance(item, str):
            out.append(item)
            continue

        if item.is_leaf:
            out.append(suffix(item))
            continue

        stack.append(")" + suffix(item))
        for position in range(len(item.children) - 1, -1, -1):
            stack.append(item.children[position])
            if position > 0:
                stack.append(",")
        stack.append("(")

    return "".join(out) + ";"


# Возрасты вершин
# ------------------
def with_ages(phylo: Phylogeny) -> Phylogeny:
    """Копия дерева, в которой возрасты вершин восстановлены по длинам ветвей

    Если возрасты уже заданы у всех вершин, дерево возвращается без изменений.
    """
    nodes = list(phylo.root.preorder())
    if all(node.age is not None for node in nodes):
        return phylo

    phylo = phylo.model_copy(deep=True)
    depth = {id(phylo.root): 0.0}

    for node in phylo.root.preorder():
        for child in node.children:
            if child.length is None:
                raise StructureError("Нет возраста вершины: у ветви не указана длина")
            depth[id(child)] = depth[id(node)] + child.length

    leaves = phylo.leaves()
    height = max(depth[id(leaf)] for leaf in leaves)

    if any(abs(depth[id(leaf)] - height) > ULTRAMETRIC_TOL * max(height, 1.0) for leaf in leaves):
        raise StructureError("Дерево не ультраметрично")

    for node in phylo.root.preorder():
        node.age = 0.0 if node.is_leaf else height - depth[id(node)]

    return phylo


# Ранжированные формы
# ------------------
def _phylo_ranks(phylo: Phylogeny) -> dict[int, int]:
    internal = with_ages(phylo).internal_nodes()
    original = phylo.internal_nodes()

    ages = [node.age for node in internal]
    if len(set(ages)) != len(ages):
        raise StructureError("Ранги не определены: совпадающие возрасты внутренних вершин")

    order = sorted(range(len(internal)), key=lambda i: -ages[i])
    return {id(original[i]): rank for rank, i in enumerate(order, start=1)}


def ranked_shape_code(tree: Phylogeny | OrientedTree, oriented: bool = False) -> RankedShapeCode:
    """Каноническая запись ранжированной формы дерева

    Лист - '*', внутренняя вершина - '(ранг:коды потомков)'. Без oriented коды
    потомков сортируются, и запись не зависит от меток листьев и перестановок
    потомков.
    """
    if isinstance(tree, OrientedTree):
        def children(node: OrientedNode) -> list[OrientedNode]:
            return [child for child in (node.left, node.right) if child is not None]

        def rank(node: OrientedNode) -> int:
            return node.rank

        root = tree.root
    else:
        ranks = _phylo_ranks(tree)

        def children(node: PhyloNode) -> list[PhyloNode]:
            return node.children

        def rank(node: PhyloNode) -> int:
            return ranks[id(node)]

        root = tree.root

    codes: dict[int, str] = {}
    stack = [(root, False)]

    while stack:
        node, visited = stack.pop()
        kids = children(node)

        if not kids:
            codes[id(node)] = "*"
            continue

        if len(kids) != 2:
            raise StructureError("Ранжированная форма определена только для бинарных деревьев")

        if not visited:
            stack.append((node, True))
            stack.extend((child, False) for child in kids)
            continue

        parts = [codes[id(child)] for child in kids]
        if not oriented:
            parts.sort()
        codes[id(node)] = f"({rank(node)}:{','.join(parts)})"

    return RankedShapeCode(code=codes[id(root)])


# LTT
# ------------------
def ltt_from_tree(phylo: Phylogeny, normalize: bool = False) -> LTTCurve:
    """Кривая LTT дерева: (возраст события, число линий после него) и (0, n)

    Если у корня есть ветвь, кривая начинается с 1 линии в момент происхождения.
    При normalize время переводится в x -> 1 - x / (возраст mrca).
    """
    dated = with_ages(phylo)
    internal = sorted(dated.internal_nodes(), key=lambda node: -node.age)

    points: list[tuple[float, int]] = []
    rooting = LTTRooting.MRCA

    if dated.root.length is not None and dated.root.length > 0:
        rooting = LTTRooting.ORIGIN
        points.append((dated.root.age + dated.root.length, 1))

    lineages = 1
    for node in internal:
        lineages += len(node.children) - 1
        points.append((node.age, lineages))

    points.append((0.0, len(dated.leaves())))

    if normalize and dated.root.age > 0:
        points = [(1 - time / dated.root.age, count) for time, count in points]

    return LTTCurve(points=points, rooting=rooting, normalized=normalize)


def expected_ltt(
    params: BDParams,
    n: int,
    normalize: bool = False,
    cond: AgeCondition | None = None,
) -> LTTCurve:
    """Ожидаемая LTT: точки (E[A^k], k+1) и (0, n)

    При normalize время переводится в x -> 1 - x / E[A^1]: mrca в 0, сегодня в 1.
    Нормируются ожидания, а не ожидание отношения.

    Пример:
    expected_ltt(BDParams(lam=1), 3).points == [(5/6, 2), (1/3, 3), (0.0, 3)]
    """
    cond = cond or AgeCondition.uniform_prior()
    expectations = [result.value for result in expected_kth_table(params, n, cond)]

    points = [(value, k + 1) for k, value in enumerate(expectations, start=1)]
    points.append((0.0, n))

    if normalize:
        oldest = expectations[0]
        points = [(1 - time / oldest, count) for time, count in points]

    return LTTCurve(points=points, normalized=normalize)


def ltt_tsv(curves: Sequence[LTTCurve], invocation: Sequence[str], precision: int) -> str:
    """TSV 'time<TAB>lineages' (при нескольких кривых - с колонкой tree)"""
    if len(curves) == 1:
        rows = [(float(time), count) for time, count in curves[0].points]
        return write_tsv(["time", "lineages"], rows, invocation, precision)

    rows = [
        (index, float(time), count)
        for index, curve in enumerate(curves)
        for time, count in curve.points
    ]
    return write_tsv(["tree", "time", "lineages"], rows, invocation, precision)
