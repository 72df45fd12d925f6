"""Модуль для управления файлами конфигурации анализа."""

import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional

from .exceptions import ConfigError
from .models import AnalysisConfig, SimulationConfig


logger = logging.getLogger(__name__)

_TUPLE_FIELDS = ("pi0", "u0", "horizons", "cvec", "start_distribution")


@dataclass
class ConfigManagerSettings:
    """Настройки для ConfigManager."""
    config_dir: Path = Path("configs")
    analysis_file: str = "analysis.json"


def _as_tuples(data: Dict[str, Any]) -> Dict[str, Any]:
    return {
        key: tuple(value) if key in _TUPLE_FIELDS and isinstance(value, list) else value
        for key, value in data.items()
    }


def _check_keys(data: Dict[str, Any], cls, section: str) -> None:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Неизвестные ключи в {section}: {', '.join(unknown)}")


def config_from_dict(data: Dict[str, Any]) -> AnalysisConfig:
    """Собирает AnalysisConfig из словаря (ключи как у полей dataclass).

    Raises:
        ConfigError: Неизвестные ключи, неверные типы или значения вне допустимых диапазонов
    """
    if not isinstance(data, dict):
        raise ConfigError("Конфигурация должна быть JSON-объектом")
    data = dict(data)
    simulation = data.pop("simulation", {}) or {}
    if not isinstance(simulation, dict):
        raise ConfigError("Раздел simulation должен быть JSON-объектом")
    _check_keys(data, AnalysisConfig, "конфигурации")
    _check_keys(simulation, SimulationConfig, "разделе simulation")
    try:
        config = AnalysisConfig(simulation=SimulationConfig(**_as_tuples(simulation)), **_as_tuples(data))
        config.validate()
    except TypeError as e:
        raise ConfigError(f"Недопустимое значение в конфигурации: {str(e)}") from e
    return config


def config_to_dict(config: AnalysisConfig) -> Dict[str, Any]:
    return asdict(config)


class ConfigManager:
    """Менеджер файлов конфигурации анализа."""

    def __init__(self, settings: Optional[ConfigManagerSettings] = None):
        """Инициализация с настройками"""
        self.settings = settings or ConfigManagerSettings()

    @property
    def default_path(self) -> Path:
        return self.settings.config_dir / self.settings.analysis_file

    def _ensure_config_dir_exists(self, path: Path) -> None:
        """Убедимся, что каталог конфигурации существует"""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error("Не удалось создать каталог конфигурации: %s", str(e), exc_info=True)
            raise ConfigError(f"Ошибка в каталоге конфигурации: {str(e)}") from e

    def load_analysis_config(self, path: Optional[Path] = None) -> AnalysisConfig:
        """Загружает настройки анализа из JSON-файла.

        Args:
            path: Путь к файлу; по умолчанию configs/analysis.json

        Returns:
            Настройки анализа; значения по умолчанию, если файла нет

        Raises:
            ConfigError: Если файл недействителен
        """
        config_file = Path(path) if path is not None else self.default_path

        if not config_file.exists():
            if path is not None:
                logger.error("Файл конфигурации %s не найден", config_file)
                raise ConfigError(f"Файл конфигурации не найден: {config_file}")
            logger.warning("Файл конфигурации не найден, используются значения по умолчанию")
            return AnalysisConfig()

        try:
            with config_file.open("r", encoding="utf-8") as f:
                data = json.load(f)
        except (json.JSONDecodeError, OSError) as e:
            logger.error("Не удалось загрузить конфигурацию: %s", str(e), exc_info=True)
            raise ConfigError(f"Ошибка загрузки конфигурации: {str(e)}") from e

        config = config_from_dict(data)
        logger.info("Конфигурация загружена из %s", config_file)
        return config

    def save_analysis_config(self, config: AnalysisConfig, path: Optional[Path] = None) -> None:
        """Сохранение настроек анализа в файл.

        Raises:
            ConfigError: Если конфигурация не может быть сохранена
        """
        config_file = Path(path) if path is not None else self.default_path
        self._ensure_config_dir_exists(config_file)

        try:
            with config_file.open("w", encoding="utf-8") as f:
                json.dump(config_to_dict(config), f, ensure_ascii=False, indent=2)
            logger.info("Конфигурация сохранена в %s", config_file)
        except (OSError, TypeError) as e:
            logger.error("Не удалось сохранить конфигурацию: %s", str(e), exc_info=True)
            raise ConfigError(f"Ошибка сохранения конфигурации: {str(e)}") from e
