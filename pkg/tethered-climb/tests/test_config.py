import os

import pytest

from conftest import CONF_DIR
from tethered_climb import __version__
from tethered_climb.config import load_config, parse_config, provenance
from tethered_climb.exceptions import ConfigError
from tethered_climb.terrain import nyquist_max_freq_index


@pytest.mark.parametrize('name', ['scenario.yml', 'failure_injection.yml', 'study.yml'])
def test_shipped_configs_load(name):
    config = load_config(os.path.join(CONF_DIR, name))
    assert config.digest, f"{name} has no digest"
    assert config.output.dir.startswith('outputs')


def test_scenario_config_sections():
    config = load_config(os.path.join(CONF_DIR, 'scenario.yml'))
    assert len(config.perception.candidates) == 3
    assert config.climb.initial_positions[3] == (0.0, 0.0, 0.0)
    assert config.grip.spine.tensile_strength == 1.5e9
    assert config.robot_params().thrust_magnitude == pytest.approx(18.87, abs=0.01)


def test_failure_config_keeps_pairs():
    config = load_config(os.path.join(CONF_DIR, 'failure_injection.yml'))
    assert config.climb.failures == ((3, 0),)
    assert config.climb.scenario(config.robot.params(), config.seed).failures == ((3, 0),)


def test_defaults_fill_missing_sections():
    config = parse_config({})
    assert config.body_obj().gravity == 3.71
    assert config.perception is None
    assert config.tethers.system(4).has_hub


def test_unknown_key_names_its_path():
    with pytest.raises(ConfigError, match='terrain.fractal_dimm'):
        parse_config({'terrain': {'fractal_dimm': 2.5}})
    with pytest.raises(ConfigError, match='grip.spine.tip'):
        parse_config({'grip': {'spine': {'tip': 1e-5}}})
    with pytest.raises(ConfigError, match='colour'):
        parse_config({'colour': 'red'})


def test_wrong_type_names_its_path():
    with pytest.raises(ConfigError, match='robot.mass'):
        parse_config({'robot': {'mass': 'heavy'}})
    with pytest.raises(ConfigError, match='seed'):
        parse_config({'seed': True})


def test_zero_thrust_rejected():
    with pytest.raises(ConfigError, match='thrust'):
        parse_config({'robot': {'thrust': 0.0}})


def test_batch_must_leave_anchors():
    with pytest.raises(ConfigError):
        parse_config({'climb': {'hop_batch': 4}})


def test_trials_override():
    assert parse_config({}, trials=500).study.trials == 500
    with pytest.raises(ConfigError):
        parse_config({}, trials=0)


def test_max_freq_defaults_to_lattice_limit():
    config = parse_config({'terrain': {'max_freq_index': None}})
    assert config.terrain.params(0).max_freq_index == nyquist_max_freq_index(1e-3, 1e-5, 1.5)
    config = parse_config({'terrain': {'max_freq_index': 4}})
    assert config.terrain.params(0).max_freq_index == 4


def test_seed_override_changes_digest():
    base = parse_config({'seed': 1})
    other = parse_config({'seed': 1}, seed=2)
    assert other.seed == 2
    assert base.digest != other.digest
    assert parse_config({'seed': 1}).digest == base.digest


def test_perceived_target_needs_candidates():
    with pytest.raises(ConfigError, match='candidates'):
        parse_config({'hop': {'target': 'perceived'}})


def test_unknown_body_needs_gravity():
    with pytest.raises(ConfigError):
        parse_config({'body': {'name': 'Titan'}})
    assert parse_config({'body': {'name': 'Titan', 'gravity': 1.35}}).body_obj().gravity == 1.35


def test_bad_yaml_is_a_config_error(tmp_path):
    path = tmp_path / 'broken.yml'
    path.write_text('terrain: [unclosed\n')
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_provenance():
    config = parse_config({'seed': 9})
    prov = provenance(config)
    assert prov['tool'] == 'tethered-climb'
    assert prov['version'] == __version__
    assert prov['seed'] == 9
    assert len(prov['config_sha256']) == 64


def test_exponent_without_dot_is_a_number(tmp_path):
    path = tmp_path / 'plain.yml'
    path.write_text('terrain:\n  spacing: 1e-5\n  roughness_amp: 2E-8\ngrip:\n  spine:\n'
        '    tensile_strength: 1.5e9\n')
    config = load_config(str(path))
    assert config.terrain.spacing == 1e-5
    assert config.terrain.roughness_amp == 2e-8
    assert config.grip.spine.tensile_strength == 1.5e9
    assert config.seed == 0


@pytest.mark.parametrize('edge', [['robot_0', 'hub', 'robot_1'], ['robot_0'], 'robot_0'])
def test_tether_edge_needs_two_nodes(edge):
    with pytest.raises(ConfigError, match='two nodes'):
        parse_config({'tethers': {'edges': [edge, ['robot_1', 'hub']]}})
