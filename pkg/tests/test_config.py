import numpy as np
import pytest

from formseek.config import OUTPUT_DIR_ENV, default_initial, load_config, parse_config
from formseek.controller import Gains
from formseek.errors import ConfigError
from formseek.field import GAUSSIAN_FIELD, MULTIMODAL_FIELD
from formseek.geometry import check_assumption2

SCENARIO = """
[field]
preset = "paper-gaussian"
[gains]
k0 = 0.7
k1 = 0.05
k2 = 0.05
[formation]
size = 0.4
"""


def test_gaussian_scenario():
    cfg = parse_config(SCENARIO)
    assert cfg.field is GAUSSIAN_FIELD
    assert cfg.gains == Gains(0.7, 0.05, 0.05)
    np.testing.assert_allclose(cfg.spec.r2_star, [0, 0.4], atol=1e-16)
    assert cfg.analysis.seed == 0
    assert check_assumption2(cfg.initial, cfg.spec).passed


def test_defaults_when_empty():
    cfg = parse_config("")
    assert cfg.gains == Gains(0.7, 0.05, 0.05)
    assert cfg.field is GAUSSIAN_FIELD
    np.testing.assert_array_equal(cfg.initial.x0, [300, 250])
    assert cfg.sim.dt == 0.05 and cfg.sim.t_max == 1000.0


def test_default_initial_layout():
    cfg = parse_config("[formation]\nsize = 0.4\nangle_deg = 60\n")
    init = default_initial(cfg.spec)
    np.testing.assert_allclose(init.x1 - init.x0, 2 * cfg.spec.r1_star)
    np.testing.assert_allclose(init.x2 - init.x0, 1.5 * cfg.spec.r2_star + 0.5 * cfg.spec.r1_star)
    assert check_assumption2(init, cfg.spec).passed


def test_inline_fields():
    cfg = parse_config("""
[field]
kind = "sum_of_gaussians"
[[field.terms]]
amplitude = 2.0
center = [1.0, 2.0]
shape = [[0.01, 0.0], [0.0, 0.02]]
[[field.terms]]
amplitude = 1.0
center = [5.0, 2.0]
shape = [[0.01, 0.0], [0.0, 0.01]]
""")
    assert cfg.field.kind == "sum_of_gaussians" and len(cfg.field.terms) == 2
    q = parse_config('[field]\nkind = "quadratic"\nq = [[-1.0, 0.0], [0.0, -2.0]]\ncenter = [1.0, 1.0]\n').field
    np.testing.assert_array_equal(q.hessian((0, 0)), [[-1, 0], [0, -2]])
    a = parse_config('[field]\nkind = "affine"\na = [1, 2]\nb = 3\n').field
    assert a.value((1, 1)) == 6.0
    g = parse_config('[field]\nkind = "gaussian"\namplitude = 5\ncenter = [0, 0]\nshape = [[1, 0], [0, 1]]\n').field
    assert g.value((0, 0)) == 5.0


def test_multimodal_preset():
    assert parse_config('[field]\npreset = "paper-multimodal"\n').field is MULTIMODAL_FIELD


def test_vector_formation_and_initial():
    cfg = parse_config("""
[formation]
r1 = [0.5, 0.0]
r2 = [0.0, 0.3]
[initial]
x0 = [0, 0]
x1 = [1, 0]
x2 = [0, 1]
[simulation]
dt = 0.1
t_max = 10
record_stride = 2
[analysis]
seed = 9
lmi_objective = "bound"
""")
    np.testing.assert_array_equal(cfg.spec.r2_star, [0, 0.3])
    np.testing.assert_array_equal(cfg.initial.x2, [0, 1])
    assert cfg.sim.record_stride == 2 and cfg.analysis.seed == 9 and cfg.analysis.lmi_objective == "bound"


@pytest.mark.parametrize("text,key", [
    ("[gains]\nk0 = -1\n", "gains.k0"),
    ("[gains]\nk1 = 0\n", "gains.k1"),
    ("[gains]\nk0 = \"fast\"\n", "gains.k0"),
    ("[gainz]\nk0 = 1\n", "gainz"),
    ("[gains]\nk3 = 1\n", "gains.k3"),
    ("[field]\npreset = \"nope\"\n", "field.preset"),
    ("[field]\nkind = \"cubic\"\n", "field.kind"),
    ("[field]\npreset = \"paper-gaussian\"\nkind = \"affine\"\n", "field"),
    ("[formation]\nr1 = [1.0, 0.0]\nr2 = [2.0, 0.0]\n", "formation"),
    ("[formation]\nr1 = [1.0, 0.0]\nsize = 1\n", "formation"),
    ("[initial]\nx0 = [1, 2, 3]\n", "initial.x0"),
    ("[simulation]\ndt = 0\n", "simulation.dt"),
    ("[simulation]\nrecord_stride = 1.5\n", "simulation.record_stride"),
    ("[simulation]\nt_max = 0.01\n", "simulation"),
    ("[analysis]\nlmi_objective = \"fast\"\n", "analysis.lmi_objective"),
    ("[output]\ndir = 3\n", "output.dir"),
    ("[field]\nkind = \"sum_of_gaussians\"\n[[field.terms]]\namplitude = 1\ncenter = [0, 0]\nshape = [[1, 0], [0, -1]]\n", "field.terms"),
])
def test_semantic_errors_carry_key(text, key):
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.key == key
    assert str(ei.value).startswith(key)


def test_syntax_error_line():
    with pytest.raises(ConfigError) as ei:
        parse_config("[gains]\nk0 = 0.7\nk1 = = 2\n")
    assert ei.value.line == 3
    assert "line 3" in str(ei.value)


def test_output_env(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert parse_config("").output.dir == str(tmp_path)
    assert parse_config('[output]\ndir = "x"\n').output.dir == "x"


def test_load_examples():
    from pathlib import Path

    for p in sorted(Path(__file__).resolve().parents[1].joinpath("configs").glob("*.toml")):
        cfg = load_config(p)
        assert check_assumption2(cfg.initial, cfg.spec).passed
