"""
Test suite for run configuration loading and system construction.
"""
import json
import tempfile
import unittest
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from data.config_loader import (
    RunConfig,
    apply_overrides,
    build_quadrotor_study,
    build_system,
    config_from_dict,
    load_run_config,
)
from models.quadrotor import POSITION_COORDS
from utils.errors import ConfigError

from tests.test_system_loader import integrator_description


class TestRunConfig(unittest.TestCase):
    """Test cases for defaults, derived values and validation."""

    def test_defaults(self):
        """Test the default run: ten steps of 0.1 s with h = horizon / 200."""
        config = load_run_config()
        self.assertEqual(config.system, "quadrotor")
        self.assertAlmostEqual(config.h, 0.0005)
        self.assertAlmostEqual(config.end_time, 1.0)
        self.assertEqual(config.disturbance_model, "additive")
        self.assertGreaterEqual(config.workers, 1)

    def test_explicit_step_and_end(self):
        """Test step_size and t_end taking precedence over the derived values."""
        config = config_from_dict({"step_size": 0.01, "t_end": 0.5})
        self.assertEqual(config.h, 0.01)
        self.assertEqual(config.end_time, 0.5)
        grid = config.grid()
        self.assertEqual(grid.steps, 50)
        self.assertEqual(len(grid.snapshot_indices), 10)

    def test_unknown_key(self):
        """Test rejection of keys that are not config fields."""
        with self.assertRaisesRegex(ConfigError, "colour"):
            config_from_dict({"colour": "red"})

    def test_invalid_values(self):
        """Test rejection of out-of-range values."""
        bad = [
            {"horizon": 0.0},
            {"step_size": 0.03},
            {"reps": 2},
            {"n_directions": 0},
            {"snapshots": 1},
            {"fusion_tol": -1.0},
            {"coords": []},
            {"disturbance_model": "multiplicative"},
            {"system": "helicopter"},
            {"t_end": -1.0},
        ]
        for data in bad:
            with self.subTest(data=data):
                with self.assertRaises(ConfigError):
                    config_from_dict(data)

    def test_apply_overrides(self):
        """Test that None overrides keep file values and others replace them."""
        config = RunConfig(seed=3).validate()
        updated = apply_overrides(config, {"seed": None, "n_directions": 4})
        self.assertEqual(updated.seed, 3)
        self.assertEqual(updated.n_directions, 4)
        self.assertEqual(config.n_directions, 10)
        with self.assertRaises(ConfigError):
            apply_overrides(config, {"n_cap": 0})

    def test_load_file(self):
        """Test a config file and malformed or missing files."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text(json.dumps({"seed": 7, "coords": [0, 1]}))
            config = load_run_config(path)
            self.assertEqual(config.seed, 7)
            self.assertEqual(config.coords, [0, 1])

            path.write_text("[1, 2]")
            with self.assertRaises(ConfigError):
                load_run_config(path)
            path.write_text("{")
            with self.assertRaises(ConfigError):
                load_run_config(path)
            with self.assertRaises(ConfigError):
                load_run_config(Path(tmp) / "missing.json")


class TestBuildSystem(unittest.TestCase):
    """Test cases for materializing the configured system."""

    def test_inline_system(self):
        """Test an inline description without preset coordinates."""
        config = config_from_dict({"system": integrator_description(), "t_end": 1.0, "step_size": 0.01})
        system, unc, coords = build_system(config)
        self.assertEqual(system.n, 2)
        self.assertEqual(unc.u.at(0.0)[1][0, 0], 1.0)
        self.assertIsNone(coords)

    def test_quadrotor_preset(self):
        """Test the preset with a coarse tracking grid."""
        config = config_from_dict({"steps": 2, "quadrotor": {"horizon": 0.5, "intervals": 100}})
        system, unc, coords = build_system(config)
        self.assertEqual((system.n, system.m, system.p), (12, 12, 3))
        self.assertEqual(system.span, (0.0, 0.5))
        self.assertEqual(coords, POSITION_COORDS)
        self.assertEqual(unc.x0.dim, 12)

    def test_quadrotor_options(self):
        """Test parameter overrides and rejection of a run beyond the tracking horizon."""
        config = config_from_dict({"steps": 2, "quadrotor": {"horizon": 0.5, "intervals": 100, "mass": 0.5}})
        self.assertEqual(build_quadrotor_study(config).params.mass, 0.5)

        late = config_from_dict({"quadrotor": {"horizon": 0.5, "intervals": 100}})
        with self.assertRaisesRegex(ConfigError, "horizon"):
            build_system(late)
        unknown = config_from_dict({"steps": 2, "quadrotor": {"intervals": 100, "rotors": 6}})
        with self.assertRaises(ConfigError):
            build_system(unknown)


if __name__ == '__main__':
    unittest.main()
