import json

import pytest

from core.config_manager import ConfigManager, ConfigManagerSettings, config_from_dict, config_to_dict
from core.exceptions import ConfigError
from core.models import AnalysisConfig

from .conftest import CONFIG_DIR


def test_shipped_defaults_match_dataclass():
    manager = ConfigManager(ConfigManagerSettings(config_dir=CONFIG_DIR))
    assert manager.load_analysis_config() == AnalysisConfig()


def test_example_config(example_config_path):
    config = ConfigManager().load_analysis_config(example_config_path)
    assert config.pi0 == (0.7, 0.3, 0.0, 0.0)
    assert config.u0 == (2100.0, 900.0, 0.0, 0.0)
    assert config.cvec == (0.0, 0.0, 0.7, 0.3)
    assert config.simulation.subjects == 1000
    assert config.simulation.skip_probability == 0.2
    assert config.simulation.seed == 2023


def test_missing_default_file_gives_defaults(tmp_path):
    manager = ConfigManager(ConfigManagerSettings(config_dir=tmp_path))
    assert manager.load_analysis_config() == AnalysisConfig()


def test_missing_explicit_file_is_an_error(tmp_path):
    with pytest.raises(ConfigError, match="не найден"):
        ConfigManager().load_analysis_config(tmp_path / "absent.json")


def test_save_and_load(tmp_path):
    manager = ConfigManager(ConfigManagerSettings(config_dir=tmp_path / "nested"))
    config = config_from_dict({"tolerance": 1e-8, "horizons": [2.0, 5.0], "simulation": {"seed": 42}})
    manager.save_analysis_config(config)
    assert manager.default_path.exists()
    loaded = manager.load_analysis_config()
    assert loaded == config
    assert loaded.horizons == (2.0, 5.0)
    assert loaded.simulation.seed == 42


def test_partial_config_keeps_defaults():
    config = config_from_dict({"significance": 0.01})
    assert config.significance == 0.01
    assert config.max_iter == AnalysisConfig().max_iter
    assert config_to_dict(config)["simulation"]["subjects"] == 310


@pytest.mark.parametrize("data, fragment", [
    ({"tolerence": 1e-6}, "Неизвестные ключи"),
    ({"simulation": {"patients": 5}}, "Неизвестные ключи"),
    ({"tolerance": 0.0}, "tolerance"),
    ({"max_iter": 0}, "max_iter"),
    ({"significance": 1.0}, "significance"),
    ({"pi0": [0.5, 0.2, 0.0, 0.0]}, "pi0"),
    ({"u0": [1.0, -1.0, 0.0, 0.0]}, "u0"),
    ({"horizons": [-1.0]}, "horizons"),
    ({"cvec": [1.0, 0.0]}, "cvec"),
    ({"estimator": "newton"}, "estimator"),
    ({"simulation": {"skip_probability": 1.0}}, "skip_probability"),
    ({"simulation": {"subjects": 0}}, "subject"),
    ({"tolerance": "small"}, "Недопустимое значение"),
    ({"simulation": [1]}, "simulation"),
])
def test_invalid_configs(data, fragment):
    with pytest.raises(ConfigError, match=fragment):
        config_from_dict(data)


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        ConfigManager().load_analysis_config(path)


def test_saved_file_is_plain_json(tmp_path):
    path = tmp_path / "analysis.json"
    ConfigManager().save_analysis_config(AnalysisConfig(), path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["estimator"] == "scaled_score"
    assert config_from_dict(data) == AnalysisConfig()
