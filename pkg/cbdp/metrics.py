"""Счётчики Prometheus"""

from pathlib import Path

from prometheus_client import REGISTRY, Counter, write_to_textfile

prom_quadrature_calls_count = Counter(
    "quadrature_calls",
    "Количество вызовов адаптивной квадратуры",
)

prom_quadrature_failures_count = Counter(
    "quadrature_failures",
    "Количество несошедшихся квадратур",
)

prom_cancellation_fallbacks_count = Counter(
    "moments_cancellation_fallbacks",
    "Переходы с замкнутой формулы на квадратуру из-за потери точности",
)

prom_sampled_trees_count = Counter(
    "pointproc_sampled_trees",
    "Деревья, полученные через точечный процесс",
)

(
    prom_oracle_attempts_count,
    prom_oracle_accepted_count,
    prom_oracle_capacity_count,
) = (
    Counter("oracle_attempts", "Попытки прямой симуляции"),
    Counter("oracle_accepted", "Принятые деревья прямой симуляции"),
    Counter("oracle_capacity_errors", "Симуляции, прерванные по лимиту событий"),
)


def export_metrics(path: Path) -> None:
    """Запись всех счётчиков в текстовый файл (формат textfile-коллектора)"""
    write_to_textfile(str(path), REGISTRY)
