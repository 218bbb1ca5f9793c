"""Точка входа для CLI."""

import contextlib
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import typer
from pydantic import ValidationError
from typer import Option

from . import config
from .data_types import AgeCondition, BDParams, ConditionKind, DensityKind, MomentResult, RunConfig
from .dating import dating_sidecar, date_tree, vertex_age_quantiles
from .densities import (
    gap_pdf_given_age,
    gap_pdf_uniform_prior,
    gap_pdf_yule_given_age,
    gap_pdf_yule_uniform_prior,
    kth_cdf,
    kth_cdf_uniform_prior,
    kth_inv_cdf_uniform_prior,
    kth_pdf,
    kth_pdf_uniform_prior,
    origin_cdf,
    origin_inv_cdf,
    origin_pdf,
    spec_time_cdf,
    spec_time_pdf,
)
from .exceptions import (
    CbdpError,
    DomainError,
    NewickSyntaxError,
    ParameterError,
    RegimeError,
    StructureError,
)
from .forward_sim import simulate_batch
from .metrics import export_metrics
from .moments import expected_gap, expected_kth, expected_kth_table, numeric_moment
from .phylo import expected_ltt, ltt_from_tree, ltt_tsv, parse_newick_many, write_newick
from .pointproc import label_uniformly, sample_trees
from .utils import format_number, make_rng, print, write_tsv
from .validation import checks_tsv, run_checks

DEFAULT_SEED = config['DEFAULT_SEED']
DEFAULT_TOL = float(config['DEFAULT_TOL'])
GAP_TOL = float(config['GAP_TOL'])
DEFAULT_PRECISION = config['DEFAULT_PRECISION']
DEFAULT_ALPHA = float(config['DEFAULT_ALPHA'])
ORACLE_MAX_ATTEMPTS = config['ORACLE_MAX_ATTEMPTS']

GRID_QUANTILE = 0.999
USAGE_ERRORS = (ParameterError, DomainError, RegimeError, StructureError, NewickSyntaxError)

KNOWN_AGE_KINDS = {DensityKind.SPEC_TIME, DensityKind.KTH_AGE, DensityKind.GAP_AGE, DensityKind.GAP_YULE_AGE}
GAP_KINDS = {DensityKind.GAP_AGE, DensityKind.GAP_PRIOR, DensityKind.GAP_YULE_AGE, DensityKind.GAP_YULE_PRIOR}

app = typer.Typer(add_completion=False)


@app.callback()
def main(
    ctx: typer.Context,
    metrics_file: Optional[Path] = Option(
        None,
        help="Файл для счётчиков Prometheus (формат textfile-коллектора)",
        dir_okay=False,
        show_default=False,
    ),
) -> None:
    """
    🌳 Условный реконструированный процесс рождения-гибели 🌳

    \b
    Плотности и моменты времён видообразования, сэмплирование деревьев,
    эталонная прямая симуляция, датировка деревьев и кривые LTT.
    Все команды детерминированы при заданном наборе флагов (включая --seed).
    """
    if metrics_file is not None:
        ctx.call_on_close(lambda: export_metrics(metrics_file))


# Общие помощники
# ------------------
def _run_config(**fields) -> RunConfig:
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        messages = "; ".join(error['msg'] for error in e.errors())
        raise typer.BadParameter(messages) from e


def _invocation(ctx: typer.Context) -> list[str]:
    """Полный набор флагов команды, включая значения по умолчанию"""
    flags = [ctx.info_name]

    for param in ctx.command.params:
        value = ctx.params.get(param.name)
        if value is None:
            continue

        if isinstance(value, bool):
            names = param.opts if value else param.secondary_opts
            flags.extend(names[:1])
        else:
            flags.append(f"{param.opts[0]}={value}")

    return flags


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        typer.echo(text, nl=False)
    else:
        output.write_text(text)
        print(f"💾 Записано в {output}")


@contextlib.contextmanager
def _handle_errors() -> Iterator[None]:
    """Ошибки входных данных - код 2, вычислительные - код 1"""
    try:
        yield
    except USAGE_ERRORS as e:
        print(f"❌ {e}")
        raise typer.Exit(2)
    except CbdpError as e:
        print(f"❌ {e}")
        raise typer.Exit(1)


# density
# ------------------
def _grid_upper(kind: DensityKind, params: BDParams, n: int | None, k: int | None, cond: AgeCondition) -> float:
    if kind in KNOWN_AGE_KINDS:
        return cond.age

    if kind == DensityKind.ORIGIN:
        return origin_inv_cdf(params, GRID_QUANTILE, n)

    return kth_inv_cdf_uniform_prior(params, n, k, GRID_QUANTILE)


def _density_at(
    kind: DensityKind,
    params: BDParams,
    run: RunConfig,
    x: float,
) -> tuple[float, float | str]:
    """(pdf, cdf); у плотностей промежутков cdf нет"""
    n, k, l, cond = run.n, run.k, run.l, run.condition

    match kind:
        case DensityKind.SPEC_TIME:
            return spec_time_pdf(params, x, cond), spec_time_cdf(params, x, cond)
        case DensityKind.ORIGIN:
            return origin_pdf(params, x, n), origin_cdf(params, x, n)
        case DensityKind.KTH_AGE:
            return kth_pdf(params, n, k, x, cond), kth_cdf(params, n, k, x, cond)
        case DensityKind.KTH_PRIOR:
            return kth_pdf_uniform_prior(params, n, k, x), kth_cdf_uniform_prior(params, n, k, x)
        case DensityKind.GAP_AGE:
            return gap_pdf_given_age(params, n, k, l, x, cond.age, max(run.tol, GAP_TOL)), "-"
        case DensityKind.GAP_PRIOR:
            return gap_pdf_uniform_prior(params, n, k, l, x, max(run.tol, GAP_TOL)), "-"
        case DensityKind.GAP_YULE_AGE:
            return gap_pdf_yule_given_age(params, n, k, l, x, cond.age), "-"
        case DensityKind.GAP_YULE_PRIOR:
            return gap_pdf_yule_uniform_prior(params, n, k, l, x), "-"


def _check_density_flags(kind: DensityKind, run: RunConfig) -> None:
    if kind in KNOWN_AGE_KINDS and run.age is None:
        raise typer.BadParameter(f"Плотность {kind} требует --age")

    if kind not in KNOWN_AGE_KINDS and run.age is not None:
        raise typer.BadParameter(f"Плотность {kind} задана при равномерном априоре, --age не нужен")

    if kind != DensityKind.SPEC_TIME and run.n is None:
        raise typer.BadParameter(f"Плотность {kind} требует --n")

    if kind in {DensityKind.KTH_AGE, DensityKind.KTH_PRIOR} | GAP_KINDS and run.k is None:
        raise typer.BadParameter(f"Плотность {kind} требует --k")

    if kind in GAP_KINDS and run.l is None:
        raise typer.BadParameter(f"Плотность {kind} требует --l")

    if kind in GAP_KINDS and run.mrca:
        raise typer.BadParameter("Плотности промежутков определены только для возраста происхождения")


@app.command()
def density(
    ctx: typer.Context,
    kind: DensityKind = Option(..., help="Плотность", show_default=False),
    lam: float = Option(1.0, "--lambda", help="Интенсивность рождения"),
    mu: float = Option(0.0, "--mu", help="Интенсивность гибели"),
    n: Optional[int] = Option(None, help="Число видов сегодня", show_default=False),
    k: Optional[int] = Option(None, help="Номер события (1 - самое старое)", show_default=False),
    l: Optional[int] = Option(None, help="Второй номер события для промежутка, l > k", show_default=False),
    age: Optional[float] = Option(None, help="Возраст дерева (иначе - равномерный априор)", show_default=False),
    mrca: bool = Option(False, help="--age - возраст mrca, а не происхождения"),
    points: int = Option(101, min=2, help="Число точек сетки"),
    upper: Optional[float] = Option(None, help="Правая граница сетки", show_default=False),
    tol: float = Option(DEFAULT_TOL, help="Допуск квадратуры"),
    precision: int = Option(DEFAULT_PRECISION, help="Значащих цифр в выводе"),
    output: Optional[Path] = Option(None, help="Файл вывода (иначе stdout)", show_default=False),
) -> None:
    """Таблица pdf/cdf любой плотности на равномерной сетке (TSV)"""
    run = _run_config(
        command="density", lam=lam, mu=mu, n=n, k=k, l=l, age=age, mrca=mrca,
        tol=tol, precision=precision, output=output,
    )
    _check_density_flags(kind, run)

    with _handle_errors():
        params = run.params
        right = upper if upper is not None else _grid_upper(kind, params, run.n, run.k, run.condition)
        if not right > 0:
            raise DomainError(f"Правая граница сетки должна быть положительной: {right}")

        rows = [(float(x), *_density_at(kind, params, run, float(x))) for x in np.linspace(0, right, points)]

    _emit(write_tsv(["x", "pdf", "cdf"], rows, _invocation(ctx), run.precision), run.output)


# expect
# ------------------
@app.command()
def expect(
    ctx: typer.Context,
    lam: float = Option(1.0, "--lambda", help="Интенсивность рождения"),
    mu: float = Option(0.0, "--mu", help="Интенсивность гибели"),
    n: int = Option(..., help="Число видов сегодня", show_default=False),
    k: Optional[int] = Option(None, help="Номер события; без него - таблица по всем k", show_default=False),
    l: Optional[int] = Option(None, help="С --k: ожидание промежутка A^k - A^l", show_default=False),
    moment: int = Option(1, min=1, help="Порядок момента (выше 1 - квадратурой)"),
    age: Optional[float] = Option(None, help="Возраст дерева (иначе - равномерный априор)", show_default=False),
    mrca: bool = Option(False, help="--age - возраст mrca, а не происхождения"),
    tol: float = Option(DEFAULT_TOL, help="Допуск квадратуры"),
    precision: int = Option(DEFAULT_PRECISION, help="Значащих цифр в выводе"),
    output: Optional[Path] = Option(None, help="Файл вывода (иначе stdout)", show_default=False),
) -> None:
    """Ожидаемые времена видообразования E[A^k] (одно число или таблица TSV)"""
    run = _run_config(
        command="expect", lam=lam, mu=mu, n=n, k=k, l=l, age=age, mrca=mrca,
        tol=tol, precision=precision, output=output,
    )

    if l is not None and (k is None or moment != 1):
        raise typer.BadParameter("--l задаётся вместе с --k и только для первого момента")

    with _handle_errors():
        params, cond = run.params, run.condition

        def value_of(index: int) -> MomentResult:
            if moment == 1:
                return expected_kth(params, n, index, cond, run.tol)
            return numeric_moment(params, n, index, moment, cond, run.tol)

        if k is not None:
            value = expected_gap(params, n, k, l, cond, run.tol) if l is not None else value_of(k).value
            _emit(format_number(value, run.precision) + "\n", run.output)
            return

        results = expected_kth_table(params, n, cond, run.tol) if moment == 1 else [value_of(i) for i in range(1, n)]

    rows = [(index, result.value, str(result.method)) for index, result in enumerate(results, start=1)]
    _emit(write_tsv(["k", "expectation", "method"], rows, _invocation(ctx), run.precision), run.output)


# simulate / oracle-simulate
# ------------------
def _newick_stream(trees, run: RunConfig, labels: bool) -> str:
    lines = []

    for index, tree in enumerate(trees):
        phylo = label_uniformly(tree, make_rng(run.seed, index, 1))
        if not labels:
            for leaf in phylo.leaves():
                leaf.label = None
        lines.append(write_newick(phylo, run.precision))

    return "\n".join(lines) + "\n"


@app.command()
def simulate(
    lam: float = Option(1.0, "--lambda", help="Интенсивность рождения"),
    mu: float = Option(0.0, "--mu", help="Интенсивность гибели"),
    n: int = Option(..., help="Число видов сегодня", show_default=False),
    age: Optional[float] = Option(None, help="Возраст дерева (иначе - равномерный априор)", show_default=False),
    mrca: bool = Option(False, help="--age - возраст mrca, а не происхождения"),
    seed: int = Option(DEFAULT_SEED, help="Зерно генератора"),
    count: int = Option(1, help="Число деревьев"),
    jobs: int = Option(1, help="Число процессов"),
    labels: bool = Option(True, "--labels/--no-labels", help="Случайные метки листьев 1..n"),
    precision: int = Option(config['NEWICK_PRECISION'], help="Знаков после запятой в длинах ветвей"),
    output: Optional[Path] = Option(None, help="Файл вывода (иначе stdout)", show_default=False),
) -> None:
    """Деревья через точечный процесс, по одному Newick в строке"""
    run = _run_config(
        command="simulate", lam=lam, mu=mu, n=n, age=age, mrca=mrca,
        seed=seed, count=count, jobs=jobs, precision=precision, output=output,
    )

    with _handle_errors():
        trees = sample_trees(run.params, n, run.condition, run.seed, run.count, run.jobs)

    _emit(_newick_stream(trees, run, labels), run.output)


@app.command("oracle-simulate")
def oracle_simulate(
    lam: float = Option(1.0, "--lambda", help="Интенсивность рождения"),
    mu: float = Option(0.0, "--mu", help="Интенсивность гибели"),
    n: int = Option(..., help="Число видов сегодня (небольшое)", show_default=False),
    age: Optional[float] = Option(None, help="Возраст дерева (иначе - равномерный априор)", show_default=False),
    mrca: bool = Option(False, help="--age - возраст mrca, а не происхождения"),
    seed: int = Option(DEFAULT_SEED, help="Зерно генератора"),
    count: int = Option(1, help="Число деревьев"),
    jobs: int = Option(1, help="Число процессов"),
    max_attempts: int = Option(ORACLE_MAX_ATTEMPTS, min=1, help="Лимит попыток на одно дерево"),
    labels: bool = Option(True, "--labels/--no-labels", help="Случайные метки листьев 1..n"),
    precision: int = Option(config['NEWICK_PRECISION'], help="Знаков после запятой в длинах ветвей"),
    output: Optional[Path] = Option(None, help="Файл вывода (иначе stdout)", show_default=False),
) -> None:
    """Деревья прямой симуляцией с отбраковкой (эталон), по одному Newick в строке"""
    run = _run_config(
        command="oracle-simulate", lam=lam, mu=mu, n=n, age=age, mrca=mrca,
        seed=seed, count=count, jobs=jobs, precision=precision, output=output,
    )

    with _handle_errors():
        trees = simulate_batch(run.params, n, run.condition, run.seed, run.count, run.jobs, max_attempts)

    _emit(_newick_stream(trees, run, labels), run.output)


# date
# ------------------
@app.command()
def date(
    ctx: typer.Context,
    input_path: Path = Option(
        ...,
        "--in",
        help="Newick с недатированными деревьями",
        exists=True,
        dir_okay=False,
        show_default=False,
    ),
    out: Optional[Path] = Option(None, "--out", help="Файл датированных деревьев (иначе stdout)", show_default=False),
    sidecar: Optional[Path] = Option(None, help="TSV с возрастами и интервалами вершин", show_default=False),
    alpha: float = Option(DEFAULT_ALPHA, help="Уровень интервалов"),
    lam: float = Option(1.0, "--lambda", help="Интенсивность рождения"),
    mu: float = Option(0.0, "--mu", help="Интенсивность гибели"),
    prior: Optional[ConditionKind] = Option(None, help="Условие на возраст; origin и mrca требуют --age", show_default=False),
    age: Optional[float] = Option(None, help="Возраст дерева", show_default=False),
    mrca: bool = Option(False, help="--age - возраст mrca, а не происхождения"),
    tol: float = Option(DEFAULT_TOL, help="Допуск квадратуры"),
    precision: int = Option(config['NEWICK_PRECISION'], help="Знаков после запятой в длинах ветвей"),
) -> None:
    """Датировка вершин ожидаемыми временами видообразования (Newick на входе и выходе)"""
    if prior == ConditionKind.UNIFORM and age is not None:
        raise typer.BadParameter("--prior uniform несовместим с --age")

    if prior in (ConditionKind.ORIGIN, ConditionKind.MRCA):
        if age is None:
            raise typer.BadParameter(f"--prior {prior} требует --age")
        mrca = prior == ConditionKind.MRCA

    run = _run_config(
        command="date", lam=lam, mu=mu, age=age, mrca=mrca, tol=tol, precision=precision, output=out,
    )

    with _handle_errors():
        shapes = parse_newick_many(input_path.read_text())
        if sidecar is not None and len(shapes) != 1:
            raise DomainError(f"Файл интервалов пишется для одного дерева, во входе {len(shapes)}")

        params, cond = run.params, run.condition
        dated = [date_tree(shape, params, cond, run.tol) for shape in shapes]

        if sidecar is not None:
            intervals = vertex_age_quantiles(shapes[0], params, cond, alpha, run.tol)
            sidecar.write_text(dating_sidecar(dated[0], intervals, _invocation(ctx), DEFAULT_PRECISION))
            print(f"💾 Интервалы записаны в {sidecar}")

    _emit("".join(write_newick(tree, run.precision) + "\n" for tree in dated), run.output)


# ltt
# ------------------
@app.command()
def ltt(
    ctx: typer.Context,
    input_path: Optional[Path] = Option(
        None,
        "--in",
        help="Newick с датированными деревьями (иначе - ожидаемая LTT)",
        exists=True,
        dir_okay=False,
        show_default=False,
    ),
    lam: float = Option(1.0, "--lambda", help="Интенсивность рождения"),
    mu: float = Option(0.0, "--mu", help="Интенсивность гибели"),
    n: Optional[int] = Option(None, help="Число видов для ожидаемой LTT", show_default=False),
    age: Optional[float] = Option(None, help="Возраст дерева (иначе - равномерный априор)", show_default=False),
    mrca: bool = Option(False, help="--age - возраст mrca, а не происхождения"),
    normalize: bool = Option(False, help="Нормировать время: mrca в 0, сегодня в 1"),
    precision: int = Option(DEFAULT_PRECISION, help="Значащих цифр в выводе"),
    output: Optional[Path] = Option(None, help="Файл вывода (иначе stdout)", show_default=False),
) -> None:
    """Кривая LTT: ожидаемая по модели или по каждому дереву из файла (TSV)"""
    run = _run_config(
        command="ltt", lam=lam, mu=mu, n=n, age=age, mrca=mrca, precision=precision, output=output,
    )

    if (input_path is None) == (n is None):
        raise typer.BadParameter("Нужен ровно один из флагов --in и --n")

    with _handle_errors():
        if input_path is not None:
            curves = [ltt_from_tree(tree, normalize) for tree in parse_newick_many(input_path.read_text())]
        else:
            curves = [expected_ltt(run.params, n, normalize, run.condition)]

    _emit(ltt_tsv(curves, _invocation(ctx), run.precision), run.output)


# validate
# ------------------
@app.command()
def validate(
    ctx: typer.Context,
    seed: int = Option(DEFAULT_SEED, help="Зерно для проверок Монте-Карло"),
    tol: float = Option(DEFAULT_TOL, help="Допуск квадратуры"),
    precision: int = Option(DEFAULT_PRECISION, help="Значащих цифр в выводе"),
    output: Optional[Path] = Option(None, help="Файл вывода (иначе stdout)", show_default=False),
) -> None:
    """Встроенные перекрёстные проверки; код 3, если хоть одна не пройдена"""
    run = _run_config(command="validate", seed=seed, tol=tol, precision=precision, output=output)

    with _handle_errors():
        checks = run_checks(run.tol, run.seed)

    _emit(checks_tsv(checks, _invocation(ctx), run.precision), run.output)

    if not all(check.passed for check in checks):
        raise typer.Exit(3)
