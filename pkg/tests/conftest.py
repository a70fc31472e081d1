from pathlib import Path
import textwrap

import pytest

from t3k.physics.modes import Geometry, ModelParams

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "t3k" / "schema"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def make_params(
    ell: float = 1.0, d: float = 1.0, m: float = 1.0, Delta: float = 4.0, g0: float = 1.0, **kwargs
) -> ModelParams:
    return ModelParams.from_detuning(Geometry(ell=ell, d=d), m, Delta, g0, **kwargs)


def config_text(model: dict[str, float] | None = None, extra: str = "") -> str:
    """YAML run config with the reference model (l = d = m = 1, Delta = 4, g0 = 1)."""
    values = {"ell": 1.0, "d": 1.0, "m": 1.0, "Delta": 4.0, "g0": 1.0}
    values.update(model or {})
    lines = ["model:"] + [f"  {k}: {v!r} natural" for k, v in values.items()]
    return "\n".join(lines) + "\n" + textwrap.dedent(extra)


@pytest.fixture
def params() -> ModelParams:
    return make_params()


@pytest.fixture
def output_dir(tmp_path, monkeypatch) -> Path:
    out = tmp_path / "out"
    monkeypatch.setenv("T3K_OUTPUT_DIR", str(out))
    return out


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and data rows of an artifact, provenance lines skipped."""
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return lines[0].split(","), [line.split(",") for line in lines[1:]]
