import functools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np
from more_itertools import chunked

from . import __version__, config

BATCH_SIZE = config['BATCH_SIZE']

print = functools.partial(print, flush=True, file=sys.stderr)


def make_rng(seed: int, index: int = 0, stream: int = 0) -> np.random.Generator:
    """Независимый поток случайных чисел для дерева с номером index

    Параметры:
    seed  : Базовое зерно
    index : Номер дерева в пакете
    stream: Номер потока внутри дерева (0 - времена, 1 - метки листьев)

    Поток зависит только от (seed, index, stream), поэтому пакет
    воспроизводим при любом числе процессов.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, index, stream]))


def format_number(value: float, precision: int) -> str:
    """Число с precision значащими цифрами; у целых сохраняется `.0`

    Пример:
    format_number(1.0, 12) == "1.0"
    format_number(0.123456789, 3) == "0.123"
    """
    text = f"{value:.{precision}g}"

    if math.isfinite(value) and not any(c in text for c in ".en"):
        text += ".0"

    return text


def format_length(value: float, digits: int) -> str:
    """Длина ветви с не более чем digits знаками после запятой, без хвостовых нулей

    Пример:
    format_length(1.23456, 3) == "1.235"
    format_length(1.0, 12) == "1"
    """
    text = f"{value:.{digits}f}"

    if "." in text:
        text = text.rstrip("0").rstrip(".")

    return "0" if text in ("-0", "") else text


def tsv_header(invocation: Sequence[str]) -> str:
    """Комментарий-заголовок TSV: версия библиотеки и полный вызов"""
    return f"# cbdp {__version__}: {' '.join(invocation)}"


def write_tsv(
    columns: Sequence[str],
    rows: Iterable[Sequence[float | int | str]],
    invocation: Sequence[str],
    precision: int,
) -> str:
    lines = [tsv_header(invocation), "\t".join(columns)]

    for row in rows:
        lines.append("\t".join(
            format_number(item, precision) if isinstance(item, float) else str(item)
            for item in row
        ))

    return "\n".join(lines) + "\n"


def run_batched(
    task: Callable[[Sequence[int]], list[Any]],
    indices: Sequence[int],
    jobs: int,
) -> Iterator[Any]:
    """Выполнение task по пачкам индексов; результаты в порядке индексов

    Параметры:
    task   : Функция, принимающая пачку индексов (должна быть picklable при jobs > 1)
    indices: Индексы деревьев
    jobs   : Число процессов
    """
    batches = list(chunked(indices, BATCH_SIZE))

    if jobs <= 1 or len(batches) <= 1:
        for batch in batches:
            yield from task(batch)
        return

    with ProcessPoolExecutor(max_workers=jobs) as executor:
        for results in executor.map(task, batches):
            yield from results
