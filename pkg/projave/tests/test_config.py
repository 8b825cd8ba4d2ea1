import json
import tempfile
from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase, override_settings

from projave.config import load_run_config, run_config_from_dict
from projave.exceptions import ConfigurationError

CONFIGS = Path(settings.BASE_DIR) / 'configs'


class RunConfigTests(SimpleTestCase):
    def test_seed_is_mandatory(self):
        with self.assertRaises(ConfigurationError):
            run_config_from_dict({'command': 'chain', 'cases': []})

    def test_explicit_seed_overrides_the_file(self):
        config = run_config_from_dict({'command': 'chain', 'seed': 1}, seed=99)
        self.assertEqual(config.seed, 99)
        self.assertEqual(config.quadrature.seed, 99)

    def test_rejects_bad_values(self):
        bad = [
            {'command': 'integrate', 'seed': 1},
            {'command': 'chain', 'seed': 'soon'},
            {'command': 'chain', 'seed': 1, 'cases': {'check': 'chain'}},
            {'command': 'chain', 'seed': 1, 'sigma': 0},
            {'command': 'chain', 'seed': 1, 'quadrature': {'samples': 10}},
        ]
        for data in bad:
            with self.assertRaises(ConfigurationError, msg=data):
                run_config_from_dict(data)
        with self.assertRaises(ConfigurationError):
            run_config_from_dict([1, 2, 3])

    @override_settings(PROJAVE={'GRASSMANN_SAMPLES': 123, 'SIGMA': 4.0})
    def test_library_defaults_come_from_settings(self):
        config = run_config_from_dict({'command': 'bv', 'seed': 5, 'quadrature': {'sphere_samples': 77}})
        self.assertEqual(config.quadrature.grassmann_samples, 123)
        self.assertEqual(config.quadrature.sphere_samples, 77)
        self.assertEqual(config.sigma, 4.0)

    def test_unknown_top_level_keys_become_options(self):
        config = run_config_from_dict({'command': 'constants', 'seed': 0, 'n': [3], 'p': [1.0, 2.0]})
        self.assertEqual(config.options, {'n': [3], 'p': [1.0, 2.0]})

    def test_to_dict_replays_the_config(self):
        config = run_config_from_dict({'command': 'petty', 'seed': 8, 'sigma': 2.5,
                                       'quadrature': {'sphere_samples': 300},
                                       'cases': [{'check': 'petty', 'body': {'kind': 'cube'}}]},
                                      base_dir='/tmp/configs')
        self.assertEqual(run_config_from_dict(config.to_dict()), config)


class LoadTests(SimpleTestCase):
    def test_shipped_config(self):
        config = load_run_config(CONFIGS / 'chain.json')
        self.assertEqual(config.command, 'chain')
        self.assertEqual(config.seed, 20240602)
        self.assertEqual(config.quadrature.grassmann_samples, 100000)
        self.assertEqual(Path(config.base_dir), CONFIGS.resolve())
        self.assertEqual(len(config.cases), 3)

    def test_command_argument_wins(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.json'
            path.write_text(json.dumps({'seed': 3, 'cases': []}))
            self.assertEqual(load_run_config(path, command='bv').command, 'bv')

    def test_unreadable_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            broken = Path(tmp) / 'broken.json'
            broken.write_text('{"seed": ')
            with self.assertRaises(ConfigurationError):
                load_run_config(broken)
            with self.assertRaises(ConfigurationError):
                load_run_config(Path(tmp) / 'missing.json')
