import json

import pytest

from src.core.config import ConfigManager, available_cores, deep_merge, parse_env_value
from src.core.errors import ConfigError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("LDOF_DETECTION__METRIC", "LDOF_EVALUATION__THREADS", "LDOF_OUTPUT__DIR",
                "LDOF_NEIGHBORS__LEAFSIZE", "LDOF_LOGGING__FILE"):
        monkeypatch.delenv(key, raising=False)


def test_defaults():
    config = ConfigManager(use_dotenv=False)
    assert config.get("detection.metric") == "euclidean"
    assert config.get("neighbors.brute_force_dim") == 16
    assert config.get("missing.key", "fallback") == "fallback"


def test_file_is_deep_merged(tmp_path):
    path = tmp_path / "ldof.json"
    path.write_text(json.dumps({"neighbors": {"leafsize": 32}}), encoding="utf-8")
    config = ConfigManager(str(path), use_dotenv=False)
    assert config.get("neighbors.leafsize") == 32
    assert config.get("neighbors.brute_force_dim") == 16


def test_environment_wins(tmp_path, monkeypatch):
    path = tmp_path / "ldof.json"
    path.write_text(json.dumps({"detection": {"metric": "euclidean"}}), encoding="utf-8")
    monkeypatch.setenv("LDOF_DETECTION__METRIC", "squared_euclidean")
    monkeypatch.setenv("LDOF_EVALUATION__THREADS", "3")
    config = ConfigManager(str(path), use_dotenv=False)
    assert config.get("detection.metric") == "squared_euclidean"
    assert config.threads() == 3


def test_missing_file_keeps_defaults(tmp_path, caplog):
    with caplog.at_level("WARNING", logger="ldof.config"):
        config = ConfigManager(str(tmp_path / "absent.json"), use_dotenv=False)
    assert config.get("output.dir") == "."
    assert "not found" in caplog.text


@pytest.mark.parametrize("text", ["{broken", "[1, 2]"])
def test_malformed_file(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        ConfigManager(str(path), use_dotenv=False)


def test_threads_default_to_all_cores():
    assert ConfigManager(use_dotenv=False).threads() == available_cores() >= 1


def test_output_path(tmp_path):
    config = ConfigManager(use_dotenv=False)
    config.set("output.dir", str(tmp_path))
    assert config.output_path("r.csv") == tmp_path / "r.csv"
    assert config.output_path(str(tmp_path / "abs.csv")) == tmp_path / "abs.csv"


def test_export_is_a_copy():
    config = ConfigManager(use_dotenv=False)
    exported = config.export()
    exported["detection"]["metric"] = "changed"
    assert config.get("detection.metric") == "euclidean"


def test_env_values_take_the_default_type(monkeypatch):
    monkeypatch.setenv("LDOF_NEIGHBORS__LEAFSIZE", "8")
    monkeypatch.setenv("LDOF_LOGGING__FILE", "run.log")
    config = ConfigManager(use_dotenv=False)
    assert config.get("neighbors.leafsize") == 8
    assert config.get("logging.file") == "run.log"


def test_env_value_of_the_wrong_type(monkeypatch):
    monkeypatch.setenv("LDOF_NEIGHBORS__LEAFSIZE", "many")
    with pytest.raises(ConfigError, match="LDOF_NEIGHBORS__LEAFSIZE"):
        ConfigManager(use_dotenv=False)


@pytest.mark.parametrize("raw, like, expected", [
    ("yes", False, True),
    ("0.1", 0.05, 0.1),
    ("3", None, 3),
    ("2.5", None, 2.5),
    ("off", None, False),
    ("tree", "brute_force", "tree"),
])
def test_parse_env_value(raw, like, expected):
    assert parse_env_value(raw, like) == expected


def test_deep_merge_leaves_inputs_alone():
    base = {"a": {"x": 1, "y": 2}, "b": 1}
    merged = deep_merge(base, {"a": {"y": 3}, "c": 4})
    assert merged == {"a": {"x": 1, "y": 3}, "b": 1, "c": 4}
    assert base == {"a": {"x": 1, "y": 2}, "b": 1}
