import pytest

from t3k.core.hooks import ObservableRegistry, observable_registry
from t3k.runconfig import parse_config
from t3k.services.observables import relative_difference
from tests.conftest import config_text, make_params


def test_builtin_observables_are_registered():
    assert observable_registry.names() == [
        "delta_e",
        "delta_e_asymptotic",
        "delta_e_closed",
        "delta_e_series",
        "delta_e_spectrum",
    ]


def test_registry_rejects_duplicates_and_empty_columns():
    registry = ObservableRegistry()
    registry.register("x", ("x",), lambda params, config: {"x": 1.0})
    with pytest.raises(ValueError):
        registry.register("x", ("x",), lambda params, config: {"x": 2.0})
    with pytest.raises(ValueError):
        registry.register("y", (), lambda params, config: {})
    with pytest.raises(KeyError):
        registry.get("z")


def test_observable_checks_its_columns():
    registry = ObservableRegistry()
    registry.register("pair", ("a", "b"), lambda params, config: {"b": 2, "a": 1, "extra": 3})
    registry.register("broken", ("a",), lambda params, config: {"b": 2})
    assert registry.get("pair")(None, None) == {"a": 1, "b": 2}
    assert list(registry.get("pair")(None, None)) == ["a", "b"]
    with pytest.raises(KeyError):
        registry.get("broken")(None, None)


def test_delta_e_observable_agrees_with_closed_form():
    config = parse_config(config_text())
    record = observable_registry.get("delta_e")(make_params(), config)
    assert record["delta_e_series"] == pytest.approx(0.0025656, rel=1e-4)
    assert record["rel_diff"] < 1e-8
    assert record["j_used"] > 0


def test_relative_difference():
    assert relative_difference(1.1, 1.0) == pytest.approx(0.1)
    assert relative_difference(0.5, 0.0) == 0.5
