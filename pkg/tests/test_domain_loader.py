"""Multipatch configuration files and study settings."""

import json

import numpy as np
import pytest

from dgiga.domain_loader import StudyConfig, bundled_configs, load_config, resolve_config_path
from dgiga.errors import AlphaError, ConfigError, InterfaceMismatchError, OverlapError
from dgiga.geometry import check_domain, map_point


def box(pid, lower, upper, elements=2):
    return {"id": pid, "box": {"lower": lower, "upper": upper}, "elements": elements}


def glued(left, right, axis=0):
    return {"left": {"patch": left, "axis": axis, "side": 1}, "right": {"patch": right, "axis": axis, "side": 0}}


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="domain.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data) if isinstance(data, dict) else data, encoding="utf-8")
        return path
    return write


class TestBundledConfigs:
    def test_all_bundled_configs_load(self):
        names = bundled_configs()
        assert "smooth2d.json" in names and "lowreg3d.json" in names
        for name in names:
            _, domain = load_config(name)
            assert domain.num_patches >= 2

    def test_smooth3d(self):
        study, domain = load_config("smooth3d.json")
        assert domain.dim == 3
        assert domain.num_patches == 4
        assert domain.alpha == (1.0, 1.0, 1.0, 1.0)
        assert study.problem == "smooth" and study.problem_params == {"d": 3}

    def test_non_matching_meshes(self):
        _, domain = load_config("nonmatching2d.json")
        assert domain.interface_mesh_ratio() == pytest.approx(2.0)

    def test_curved_patches(self):
        _, domain = load_config("annulus2d.json")
        assert domain.patches[0].space.degree == 2
        assert domain.patches[0].space.shape == (3, 3)
        assert len(domain.interfaces) == 1
        assert check_domain(domain).passed
        np.testing.assert_allclose(map_point(domain.patches[0], [0.0, 1.0]), [2.0, 0.0])
        np.testing.assert_allclose(map_point(domain.patches[1], [1.0, 0.0]), [0.0, 1.0])


class TestOverrides:
    def test_cli_values_win(self):
        study, domain = load_config("smooth2d.json", {"degree": 3, "levels": 2, "mu": 50.0, "scheme": "iip"})
        assert (study.degree, study.levels, study.mu, study.scheme.value) == (3, 2, 50.0, "iip")
        assert domain.degree == 3

    def test_none_values_ignored(self):
        study, _ = load_config("smooth2d.json", {"degree": None})
        assert study.degree == 2

    def test_invalid_override(self):
        with pytest.raises(ConfigError):
            load_config("smooth2d.json", {"levels": 1})

    def test_study_defaults(self):
        study = StudyConfig()
        assert study.levels == 4 and study.format == "csv"
        assert study.dg_config().scheme == study.scheme


class TestRejectedConfigs:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            resolve_config_path(tmp_path / "absent.json")

    def test_parse_error(self, write_config):
        with pytest.raises(ConfigError, match="parse error"):
            load_config(write_config("{ not json"))

    def test_box_and_control_net(self, write_config):
        patch = box(0, [0, 0], [1, 1])
        patch.update({"degree": 1, "knots": [[0, 0, 1, 1]] * 2, "control_points": [[0, 0]] * 4})
        with pytest.raises(ConfigError):
            load_config(write_config({"patches": [patch]}))

    def test_unknown_field(self, write_config):
        data = {"patches": [box(0, [0, 0], [1, 1])], "colour": "red"}
        with pytest.raises(ConfigError):
            load_config(write_config(data))

    def test_overlap(self, write_config):
        data = {"patches": [box(0, [0, 0], [1, 1]), box(1, [0.5, 0], [1.5, 1])]}
        with pytest.raises(OverlapError):
            load_config(write_config(data))

    def test_gap_at_interface(self, write_config):
        data = {"patches": [box(0, [0, 0], [1, 1]), box(1, [2, 0], [3, 1])], "interfaces": [glued(0, 1)]}
        with pytest.raises(InterfaceMismatchError):
            load_config(write_config(data))

    def test_non_positive_alpha(self, write_config):
        data = {"alpha": [1.0, -2.0], "patches": [box(0, [-1, 0], [0, 1]), box(1, [0, 0], [1, 1])],
                "interfaces": [glued(0, 1)]}
        with pytest.raises(AlphaError):
            load_config(write_config(data))

    def test_non_matching_meshes_accepted(self, write_config):
        data = {"patches": [box(0, [-1, 0], [0, 1], 2), box(1, [0, 0], [1, 1], [3, 5])],
                "interfaces": [glued(0, 1)]}
        _, domain = load_config(write_config(data))
        assert domain.solution_spaces[1].num_elements == (3, 5)
