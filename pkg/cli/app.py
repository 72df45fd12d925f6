"""Командная строка: оценка, сводка, поглощение, критерий согласия и моделирование."""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from core.config_manager import ConfigManager
from core.data_processor import DataProcessor
from core.exceptions import (
    ConfigError, DataParsingError, ExcelExportError, InvalidParameterError, MarkovModelError, NonConvergenceError,
)
from core.excel_exporter import ExcelExporter
from core.goodness_of_fit import goodness_of_fit
from core.models import ESTIMATORS, RATE_NAMES, STATE_COUNT, AnalysisConfig, PanelDataset, RateVector
from core.cohort_simulator import simulate_panel
from core.panel_estimation import fit_panel
from core.report_builder import (
    absorption_section, build_document, dataset_section, estimation_section, gof_section, model_section,
    summary_section,
)

from .formatting import render_document


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NON_CONVERGENCE = 2
EXIT_DEGENERATE = 3
EXIT_CONFIG = 4


@dataclass
class CliConfig:
    """Конфигурация командной строки"""
    prog: str = "panel-markov"
    description: str = "Марковская модель с двумя переходными и двумя поглощающими состояниями по панельным данным"
    json_indent: int = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


def _floats(text: str, count: Optional[int] = None, name: str = "value") -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise ConfigError(f"--{name}: ожидались числа через запятую, получено {text!r}") from e
    if count is not None and len(values) != count:
        raise ConfigError(f"--{name}: ожидалось {count} чисел, получено {len(values)}")
    return values


def build_parser(cli_config: Optional[CliConfig] = None) -> argparse.ArgumentParser:
    cli_config = cli_config or CliConfig()
    parser = _Parser(prog=cli_config.prog, description=cli_config.description)
    parser.add_argument("--verbose", action="store_true", help="подробное логирование")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--input", type=Path, help="таблицы переходов или записи subject,time,state")
    common.add_argument("--output", type=Path, help="путь для JSON-отчёта (для simulate: путь для данных)")
    common.add_argument("--xlsx", type=Path, help="дополнительно экспортировать отчёт в Excel")
    common.add_argument("--config", type=Path, help="JSON-файл с настройками анализа")
    common.add_argument("--model", type=Path, help="JSON с theta и var_theta")
    common.add_argument("--theta", help="пять интенсивностей через запятую")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", type=int)
    common.add_argument("--horizons")
    common.add_argument("--pi0")
    common.add_argument("--u0")
    common.add_argument("--alpha", type=float)
    common.add_argument("--strict-gradient", action="store_true", default=None)
    common.add_argument("--cvec")
    common.add_argument("--estimator", choices=ESTIMATORS)
    common.add_argument("--subjects", type=int)
    common.add_argument("--visits", type=int)
    common.add_argument("--skip-probability", type=float)
    common.add_argument("--format", choices=("tables", "records"), default="tables")

    for name, help_text in (
            ("estimate", "оценка интенсивностей по таблицам переходов"),
            ("summarize", "времена пребывания, π(t), u(t) и предельное распределение"),
            ("absorb", "матрица Z и ожидаемые времена поглощения"),
            ("gof", "критерий согласия χ²"),
            ("simulate", "моделирование панельных данных"),
            ("report-all", "полный расчёт по входным таблицам"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def resolve_config(args: argparse.Namespace) -> AnalysisConfig:
    """Значения по умолчанию < файл --config < флаги командной строки."""
    config = ConfigManager().load_analysis_config(args.config)
    overrides: Dict[str, Any] = {}
    if args.tol is not None:
        overrides["tolerance"] = args.tol
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if args.alpha is not None:
        overrides["significance"] = args.alpha
    if args.horizons is not None:
        overrides["horizons"] = _floats(args.horizons, name="horizons")
    if args.pi0 is not None:
        overrides["pi0"] = _floats(args.pi0, STATE_COUNT, "pi0")
    if args.u0 is not None:
        overrides["u0"] = _floats(args.u0, STATE_COUNT, "u0")
    if args.cvec is not None:
        overrides["cvec"] = _floats(args.cvec, STATE_COUNT, "cvec")
    if args.strict_gradient:
        overrides["strict_gradient"] = True
    if args.estimator is not None:
        overrides["estimator"] = args.estimator

    sim_overrides: Dict[str, Any] = {}
    for flag, name in (("subjects", "subjects"), ("visits", "visits"),
                       ("skip_probability", "skip_probability"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            sim_overrides[name] = value

    config = replace(config, simulation=replace(config.simulation, **sim_overrides), **overrides)
    config.validate()
    return config


def _require_input(args: argparse.Namespace) -> PanelDataset:
    if args.input is None:
        raise ConfigError(f"Для {args.command} нужен --input")
    return DataProcessor.read_dataset(args.input)


def _resolve_model(
        args: argparse.Namespace, config: AnalysisConfig
) -> Tuple[RateVector, Optional[np.ndarray], Dict[str, Any]]:
    """θ и var(θ) из --model, --theta или оценки по --input."""
    if args.model is not None:
        theta, var_theta = DataProcessor.read_model(args.model)
        return theta, var_theta, {}
    if args.theta is not None:
        try:
            return RateVector.from_array(_floats(args.theta, len(RATE_NAMES), "theta")), None, {}
        except InvalidParameterError as e:
            raise ConfigError(str(e)) from e
    if args.input is not None:
        dataset = DataProcessor.read_dataset(args.input)
        result = fit_panel(dataset, config)
        return result.pooled_theta, result.pooled_covariance, {
            "dataset": dataset_section(dataset),
            "estimation": estimation_section(result),
        }
    raise ConfigError(f"Для {args.command} нужен --model, --theta или --input")


def cmd_estimate(args: argparse.Namespace, config: AnalysisConfig) -> Dict[str, Any]:
    dataset = _require_input(args)
    result = fit_panel(dataset, config)
    return build_document("estimate", dataset=dataset_section(dataset), estimation=estimation_section(result))


def cmd_summarize(args: argparse.Namespace, config: AnalysisConfig) -> Dict[str, Any]:
    theta, var_theta, extra = _resolve_model(args, config)
    return build_document("summarize", summary=summary_section(theta, var_theta, config), **extra)


def cmd_absorb(args: argparse.Namespace, config: AnalysisConfig) -> Dict[str, Any]:
    theta, var_theta, extra = _resolve_model(args, config)
    return build_document("absorb", model=model_section(theta, var_theta),
                          absorption=absorption_section(theta), **extra)


def cmd_gof(args: argparse.Namespace, config: AnalysisConfig) -> Dict[str, Any]:
    dataset = _require_input(args)
    theta, var_theta, extra = _resolve_model(args, config)
    extra.setdefault("dataset", dataset_section(dataset))
    report = goodness_of_fit(theta, dataset, config.significance)
    return build_document("gof", model=model_section(theta, var_theta), gof=gof_section(report), **extra)


def cmd_simulate(args: argparse.Namespace, config: AnalysisConfig) -> Dict[str, Any]:
    if args.model is None and args.theta is None:
        raise ConfigError("Для simulate нужен --model или --theta")
    theta, _, _ = _resolve_model(args, config)
    sim = config.simulation
    dataset, records = simulate_panel(theta, sim)
    if args.output is not None:
        if args.format == "records":
            DataProcessor.write_records(records, args.output)
        else:
            DataProcessor.write_count_tables(dataset, args.output)
        logger.info("Смоделированные данные записаны в %s", args.output)
    return build_document(
        "simulate",
        model=model_section(theta, None),
        simulation={
            "subjects": sim.subjects,
            "visits": sim.visits,
            "skip_probability": sim.skip_probability,
            "start_distribution": list(sim.start_distribution),
            "seed": sim.seed,
            "output": None if args.output is None else str(args.output),
            "format": args.format,
        },
        dataset=dataset_section(dataset),
    )


def cmd_report_all(args: argparse.Namespace, config: AnalysisConfig) -> Dict[str, Any]:
    dataset = _require_input(args)
    result = fit_panel(dataset, config)
    theta, var_theta = result.pooled_theta, result.pooled_covariance
    return build_document(
        "report-all",
        dataset=dataset_section(dataset),
        estimation=estimation_section(result),
        summary=summary_section(theta, var_theta, config),
        absorption=absorption_section(theta),
        gof=gof_section(goodness_of_fit(theta, dataset, config.significance)),
    )


COMMANDS: Dict[str, Callable[[argparse.Namespace, AnalysisConfig], Dict[str, Any]]] = {
    "estimate": cmd_estimate,
    "summarize": cmd_summarize,
    "absorb": cmd_absorb,
    "gof": cmd_gof,
    "simulate": cmd_simulate,
    "report-all": cmd_report_all,
}


def exit_code_for(error: MarkovModelError) -> int:
    if isinstance(error, (DataParsingError, ExcelExportError)):
        return EXIT_PARSE
    if isinstance(error, NonConvergenceError):
        return EXIT_NON_CONVERGENCE
    if isinstance(error, (ConfigError, InvalidParameterError)):
        return EXIT_CONFIG
    return EXIT_DEGENERATE


def dump_document(document: Dict[str, Any], indent: int = 2) -> str:
    return json.dumps(document, sort_keys=True, indent=indent, ensure_ascii=False) + "\n"


def run(argv: Optional[Sequence[str]] = None, cli_config: Optional[CliConfig] = None) -> int:
    """Выполняет команду и возвращает код завершения.

    Коды: 0 успех, 1 ошибка чтения данных, 2 итерации не сошлись,
    3 вырожденная модель или данные, 4 неверная конфигурация.
    """
    cli_config = cli_config or CliConfig()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser(cli_config).parse_args(argv)
        config = resolve_config(args)
        document = COMMANDS[args.command](args, config)

        if args.output is not None and args.command != "simulate":
            Path(args.output).parent.mkdir(parents=True, exist_ok=True)
            Path(args.output).write_text(dump_document(document, cli_config.json_indent), encoding="utf-8")
            logger.info("Отчёт записан в %s", args.output)
        if args.xlsx is not None:
            ExcelExporter().export_report(document, args.xlsx)
        print(render_document(document))
        return EXIT_OK
    except MarkovModelError as e:
        code = exit_code_for(e)
        logger.error("Команда завершилась с ошибкой (код %d): %s", code, str(e))
        print(f"Ошибка: {str(e)}", file=sys.stderr)
        return code
    except OSError as e:
        logger.error("Ошибка ввода-вывода: %s", str(e), exc_info=True)
        print(f"Ошибка: {str(e)}", file=sys.stderr)
        return EXIT_PARSE
