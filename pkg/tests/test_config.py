from pathlib import Path

import pytest

from fiberalloc.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_shipped_sweep_config_echo():
    cfg = load_config(CONFIGS / "hexarotor_sweep.cfg")
    v = cfg.vehicle
    assert (v.mass_kg, v.arm_radius_m, v.k_f, v.k_m) == (0.5, 0.25, 1.0, 0.05)
    assert [r.kind for r in cfg.regimes] == ["unidirectional", "box"]
    assert cfg.regimes[1].bound == 5.0
    assert (cfg.task.start, cfg.task.stop, cfg.task.step) == (0.0, 1.0, 0.05)
    assert len(cfg.task.sweep_values()) == 21
    echo = cfg.to_dict()
    assert echo["vehicle"]["mass_kg"] == 0.5 and echo["schema"] == 1


@pytest.mark.parametrize("name", ["hexarotor_sweep.cfg", "hexhover.cfg", "hexroll_pareto.cfg", "infeasible.cfg"])
def test_shipped_configs_parse(name):
    load_config(CONFIGS / name)


def test_empty_file_names_required_fields():
    with pytest.raises(ConfigError) as exc:
        parse_config("")
    paths = {e.split(":")[0] for e in exc.value.errors}
    assert paths == {"vehicle", "regimes", "task"}


def test_negative_mass_single_error():
    text = (CONFIGS / "hexhover.cfg").read_text().replace("mass_kg = 0.5", "mass_kg = -0.5")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert len(exc.value.errors) == 1
    assert exc.value.errors[0].startswith("vehicle.mass_kg")


def test_all_errors_collected_and_unknown_keys_rejected():
    text = """
[vehicle]
mass_kg = 0.5
arm_radius_m = 0
k_f = 1.0
k_m = 0.05
colour = "red"

[[regimes]]
kind = "box"

[task]
kind = "sweep"
component = "tau_w"
start = 1.0
stop = 0.0
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    joined = "\n".join(exc.value.errors)
    for frag in ("vehicle.arm_radius_m", "vehicle.colour: unknown key", "regimes[0].bound", "task.component", "task.stop"):
        assert frag in joined


def test_syntax_error_has_line_diagnostic():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("[vehicle]\nmass_kg = = 1\n")


def test_matrix_vehicle_and_wrench_list():
    cfg = parse_config("""
[vehicle]
kind = "matrix"
A = [[1.0, 2.0, 0.5]]
energy_weights = [1.0, 2.0, 1.0]

[[regimes]]
kind = "box"
bound = [1.0, 1.0, 2.0]

[task]
kind = "wrenches"
wrenches = [[1.0], [-0.5]]
""")
    sys = cfg.vehicle.build()
    assert sys.A.shape == (1, 3)
    assert len(cfg.task.wrench_list(sys)) == 2


def test_matrix_vehicle_rank_and_shape_errors():
    with pytest.raises(ConfigError) as exc:
        parse_config("""
[vehicle]
kind = "matrix"
A = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]
[[regimes]]
kind = "unidirectional"
[task]
kind = "wrench"
wrench = [1.0]
""")
    joined = "\n".join(exc.value.errors)
    assert "vehicle: allocation matrix is rank deficient" in joined
    assert "task.wrench: expected 2 entries" in joined


def test_sweep_defaults_to_hover_base():
    cfg = load_config(CONFIGS / "hexarotor_sweep.cfg")
    ws = cfg.task.wrench_list(cfg.vehicle.build())
    assert ws[0].tolist() == [0.0, 0.0, 0.0, 4.905]
    assert ws[-1].tolist() == [1.0, 0.0, 0.0, 4.905]
    assert ws[3][0] == 0.15  # no float drift in the grid
