"""Модели pydantic - для обозначения типов данных"""

import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self):
            return str(self.value)

        def __format__(self, format_spec):
            return str(self.value).__format__(format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()
from fractions import Fraction
from pathlib import Path
from typing import Iterator

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import config
from .exceptions import ParameterError

YULE_EPS = float(config['YULE_EPS'])
CRIT_EPS = float(config['CRIT_EPS'])


class Regime(StrEnum):
    YULE = "yule"
    CRITICAL = "critical"
    GENERAL = "general"


class BDParams(BaseModel):
    """Параметры процесса рождения-гибели: lambda (рождение) и mu (гибель)"""

    model_config = ConfigDict(frozen=True)

    lam: float
    mu: float = 0.0

    @model_validator(mode="after")
    def check_rates(self) -> "BDParams":
        if not (math.isfinite(self.lam) and math.isfinite(self.mu)):
            raise ValueError("Интенсивности должны быть конечными")

        if self.lam <= 0:
            raise ValueError(f"lambda должна быть положительной: {self.lam}")

        if not 0 <= self.mu <= self.lam:
            raise ValueError(f"Нужно 0 <= mu <= lambda, получено mu={self.mu}, lambda={self.lam}")

        return self

    @classmethod
    def create(cls, lam: float, mu: float = 0.0) -> "BDParams":
        """Конструктор, переводящий ошибку валидации в ParameterError"""
        try:
            return cls(lam=lam, mu=mu)
        except ValidationError as e:
            raise ParameterError(str(e)) from e

    @property
    def regime(self) -> Regime:
        if self.mu < YULE_EPS * self.lam:
            return Regime.YULE

        if self.lam - self.mu < CRIT_EPS * self.lam:
            return Regime.CRITICAL

        return Regime.GENERAL

    @property
    def rho(self) -> float:
        return self.mu / self.lam

    @property
    def net_rate(self) -> float:
        return self.lam - self.mu


class ConditionKind(StrEnum):
    ORIGIN = "origin"
    MRCA = "mrca"
    UNIFORM = "uniform"


class AgeCondition(BaseModel):
    """Условие на возраст дерева: возраст происхождения, возраст mrca или равномерный априор"""

    model_config = ConfigDict(frozen=True)

    kind: ConditionKind
    age: float | None = None

    @model_validator(mode="after")
    def check_age(self) -> "AgeCondition":
        if self.kind == ConditionKind.UNIFORM:
            if self.age is not None:
                raise ValueError("Равномерный априор не принимает возраст")
            return self

        if self.age is None or not math.isfinite(self.age) or self.age <= 0:
            raise ValueError(f"Возраст должен быть конечным и положительным: {self.age}")

        return self

    @classmethod
    def origin(cls, age: float) -> "AgeCondition":
        return cls(kind=ConditionKind.ORIGIN, age=age)

    @classmethod
    def mrca(cls, age: float) -> "AgeCondition":
        return cls(kind=ConditionKind.MRCA, age=age)

    @classmethod
    def uniform_prior(cls) -> "AgeCondition":
        return cls(kind=ConditionKind.UNIFORM)

    @property
    def is_known_age(self) -> bool:
        return self.kind != ConditionKind.UNIFORM


class QuadResult(BaseModel):
    value: float
    error_estimate: float = Field(ge=0)
    evaluations: int


class MomentMethod(StrEnum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


class MomentResult(BaseModel):
    """Момент времени видообразования и способ, которым он получен"""

    value: float
    method: MomentMethod
    cancellation_flag: bool = False
    cancellation_index: float | None = None

    @model_validator(mode="after")
    def check_flag(self) -> "MomentResult":
        if self.cancellation_flag and self.method != MomentMethod.QUADRATURE:
            raise ValueError("Флаг сокращения возможен только для квадратуры")
        return self

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


class PointProcess(BaseModel):
    """Точечный процесс: n листьев и n-1 высот в промежутках между ними

    heights[i] - точка над промежутком между листьями i+1 и i+2 (листья нумеруются с 1)
    """

    n: int = Field(ge=2)
    heights: list[float]
    age: float | None = None

    @model_validator(mode="after")
    def check_heights(self) -> "PointProcess":
        if len(self.heights) != self.n - 1:
            raise ValueError(f"Нужно {self.n - 1} высот, получено {len(self.heights)}")

        if any(not (h > 0 and math.isfinite(h)) for h in self.heights):
            raise ValueError("Все высоты должны быть положительными")

        if self.age is not None and any(h >= self.age for h in self.heights):
            raise ValueError("Все высоты должны быть меньше возраста дерева")

        return self


class OrientedNode(BaseModel):
    """Вершина ориентированного дерева; у листа есть leaf_index, у внутренней - rank"""

    time: float = 0.0
    rank: int | None = None
    leaf_index: int | None = None
    left: "OrientedNode | None" = None
    right: "OrientedNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None


class OrientedTree(BaseModel):
    """Ранжированное ориентированное дерево (ранг 1 - самое старое событие)"""

    root: OrientedNode
    n: int = Field(ge=1)
    age: float | None = None

    def inorder(self) -> Iterator[OrientedNode]:
        stack: list[OrientedNode] = []
        node = self.root

        while stack or node is not None:
            while node is not None:
                stack.append(node)
                node = node.left

            node = stack.pop()
            yield node
            node = node.right

    def internal_nodes(self) -> list[OrientedNode]:
        return [node for node in self.inorder() if not node.is_leaf]


class CompleteNode(BaseModel):
    """Линия полного дерева: рождается в start, заканчивается в end (время до настоящего)"""

    start: float
    end: float = 0.0
    extinct: bool = False
    children: list["CompleteNode"] = Field(default_factory=list)

    @property
    def is_extant(self) -> bool:
        return not self.children and not self.extinct


class CompleteTree(BaseModel):
    """Полное дерево; при mrca_rooted корень - видообразование в момент origin"""

    root: CompleteNode
    origin: float
    events: int = 0
    mrca_rooted: bool = False

    def extant_count(self) -> int:
        count = 0
        stack = [self.root]

        while stack:
            node = stack.pop()
            count += node.is_extant
            stack.extend(node.children)

        return count


class PhyloNode(BaseModel):
    label: str | None = None
    length: float | None = None
    age: float | None = None
    children: list["PhyloNode"] = Field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def preorder(self) -> Iterator["PhyloNode"]:
        stack = [self]

        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


class Phylogeny(BaseModel):
    """Корневое дерево с метками листьев, необязательными возрастами и длинами ветвей"""

    root: PhyloNode

    def leaves(self) -> list[PhyloNode]:
        return [node for node in self.root.preorder() if node.is_leaf]

    def internal_nodes(self) -> list[PhyloNode]:
        return [node for node in self.root.preorder() if not node.is_leaf]


class RankedShapeCode(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str


class LTTRooting(StrEnum):
    ORIGIN = "origin"
    MRCA = "mrca"


class LTTCurve(BaseModel):
    """Кривая LTT: пары (время до настоящего, число линий)"""

    points: list[tuple[float, int]]
    rooting: LTTRooting = LTTRooting.MRCA
    normalized: bool = False


class RankDistribution(BaseModel):
    """Точное распределение ранга вершины; probabilities[k-1] = P[rank = k]"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    vertex: int
    probabilities: list[Fraction]

    @model_validator(mode="after")
    def check_total(self) -> "RankDistribution":
        if sum(self.probabilities) != 1:
            raise ValueError("Вероятности рангов должны суммироваться в 1")
        return self

    def as_floats(self) -> list[float]:
        return [float(p) for p in self.probabilities]


class DensityKind(StrEnum):
    SPEC_TIME = "spec-time"
    ORIGIN = "origin"
    KTH_AGE = "kth-age"
    KTH_PRIOR = "kth-prior"
    GAP_AGE = "gap-age"
    GAP_PRIOR = "gap-prior"
    GAP_YULE_AGE = "gap-yule-age"
    GAP_YULE_PRIOR = "gap-yule-prior"


class ValidationCheck(BaseModel):
    """Строка отчёта встроенной проверки: вычисленное и ожидаемое значения"""

    name: str
    value: float
    expected: float
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.error) and self.error <= self.tolerance


class RunConfig(BaseModel):
    """Полный набор флагов одной команды CLI"""

    command: str
    lam: float = 1.0
    mu: float = 0.0
    n: int | None = Field(default=None, ge=1)
    k: int | None = Field(default=None, ge=1)
    l: int | None = Field(default=None, ge=2)
    age: float | None = None
    mrca: bool = False
    seed: int = Field(default=config['DEFAULT_SEED'], ge=0)
    count: int = Field(default=1, ge=1)
    jobs: int = Field(default=1, ge=1)
    tol: float = Field(default=config['DEFAULT_TOL'], gt=0)
    precision: int = Field(default=config['DEFAULT_PRECISION'], ge=1, le=17)
    output: Path | None = None

    @model_validator(mode="after")
    def check_run(self) -> "RunConfig":
        BDParams(lam=self.lam, mu=self.mu)

        if self.mrca and self.age is None:
            raise ValueError("--mrca требует --age")

        if self.k is not None and self.n is not None and self.k > self.n - 1:
            raise ValueError(f"Нужно 1 <= k <= n-1, получено k={self.k}, n={self.n}")

        if self.l is not None and self.k is not None and self.l <= self.k:
            raise ValueError(f"Нужно k < l, получено k={self.k}, l={self.l}")

        return self

    @property
    def params(self) -> BDParams:
        return BDParams(lam=self.lam, mu=self.mu)

    @property
    def condition(self) -> AgeCondition:
        if self.age is None:
            return AgeCondition.uniform_prior()

        if self.mrca:
            return AgeCondition.mrca(self.age)

        return AgeCondition.origin(self.age)


OrientedNode.model_rebuild()
CompleteNode.model_rebuild()
PhyloNode.model_rebuild()
