"""Основная точка входа в приложение"""

import sys
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from cli.app import run


@dataclass
class AppConfig:
    """Конфигурация приложения."""
    temp_dir: Path = Path("temp")
    logs_dir: Path = temp_dir / "logs"
    reports_dir: Path = temp_dir / "reports"
    log_file: Path = logs_dir / "app.log"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_level: int = logging.INFO


def setup_logging(config: AppConfig):
    """Конфигурация логирования приложения."""
    config.logs_dir.mkdir(parents=True, exist_ok=True)
    config.reports_dir.mkdir(parents=True, exist_ok=True)

    logging.basicConfig(
        level=config.log_level,
        format=config.log_format,
        handlers=[
            logging.FileHandler(config.log_file, encoding="utf-8"),
            logging.StreamHandler()
        ]
    )


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Точка входа в приложение."""
    argv = list(sys.argv[1:] if argv is None else argv)
    config = AppConfig()
    if "--verbose" in argv:
        config.log_level = logging.DEBUG
    setup_logging(config)
    logger = logging.getLogger(__name__)

    try:
        sys.exit(run(argv))
    except Exception as e:
        logger.critical("Ошибка приложения: %s", str(e), exc_info=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
