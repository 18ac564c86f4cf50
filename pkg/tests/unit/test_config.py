"""
Unit tests for configuration loading and priority
"""

import json
from pathlib import Path

import pytest
import yaml

from koopman_distill.config import (
    find_env_file,
    load_config,
    parse_seed_list,
    read_config_file,
    validate_config,
)
from koopman_distill.error_handler import ConfigError
from koopman_distill.models.config import ExperimentConfig, OptimizerConfig


class TestDefaults:
    """Test built-in defaults"""

    def test_no_sources(self):
        config = load_config()
        assert config.seeds == list(range(10))
        assert config.methods == ['naive', 'naive-pca', 'distill']
        assert config.student.pca_dim == 20 and config.student.degree == 2
        assert config.teacher.layer_sizes == [784, 20, 20, 20, 20, 20, 10]
        assert config.distill.alpha == 0.9 and config.distill.temperature == 2.0
        assert config.teacher.optimizer.lr_decay == 0.75

    def test_learning_rate_schedule(self):
        optimizer = OptimizerConfig()
        assert [optimizer.lr_at(e) for e in range(3)] == [1.0, 0.75, 0.5625]


class TestPriority:
    """Test CLI > environment > file > defaults"""

    def test_file_values(self, small_config_file):
        config = load_config(str(small_config_file))
        assert config.student.pca_dim == 3
        assert config.seeds == [0, 1]
        assert config.dataset.num_classes == 3

    def test_cli_overrides_file(self, small_config_file):
        config = load_config(str(small_config_file), seeds=[7], pca_dim=2, degree=3, methods=['distill'])
        assert config.seeds == [7]
        assert config.student.pca_dim == 2 and config.student.degree == 3
        assert config.methods == ['distill']

    def test_env_overrides_file(self, small_config_file, monkeypatch):
        monkeypatch.setenv('KOOPMAN_DISTILL_SEEDS', '2-4')
        monkeypatch.setenv('KOOPMAN_DISTILL_OUTPUT_DIR', '/tmp/env-reports')
        config = load_config(str(small_config_file))
        assert config.seeds == [2, 3, 4]
        assert config.output.dir == '/tmp/env-reports'

    def test_cli_overrides_env(self, small_config_file, monkeypatch):
        monkeypatch.setenv('KOOPMAN_DISTILL_SEEDS', '2-4')
        monkeypatch.setenv('KOOPMAN_DISTILL_OUTPUT_DIR', '/tmp/env-reports')
        config = load_config(str(small_config_file), seeds=[9], out='cli-reports')
        assert config.seeds == [9]
        assert config.output.dir == 'cli-reports'

    def test_config_from_env(self, small_config_file, monkeypatch):
        monkeypatch.setenv('KOOPMAN_DISTILL_CONFIG', str(small_config_file))
        assert load_config().student.pca_dim == 3


class TestEnvFiles:
    """Test .env discovery"""

    def test_env_in_current_directory(self):
        Path('.env').write_text('KOOPMAN_DISTILL_SEEDS=3,4\n')
        assert load_config().seeds == [3, 4]

    def test_env_in_parent_directory(self, monkeypatch):
        child = Path.cwd() / 'a' / 'b'
        child.mkdir(parents=True)
        Path('.env').write_text('KOOPMAN_DISTILL_SEEDS=5\n')
        monkeypatch.chdir(child)
        assert find_env_file() == (child.parent.parent / '.env').resolve()
        assert load_config().seeds == [5]

    def test_explicit_env_path(self, tmp_path, monkeypatch):
        env_file = tmp_path / 'custom.env'
        env_file.write_text('KOOPMAN_DISTILL_SEEDS=8\n')
        monkeypatch.setenv('KOOPMAN_DISTILL_ENV', str(env_file))
        assert load_config().seeds == [8]

    def test_shell_beats_env_file(self, monkeypatch):
        Path('.env').write_text('KOOPMAN_DISTILL_SEEDS=3\n')
        monkeypatch.setenv('KOOPMAN_DISTILL_SEEDS', '6')
        assert load_config().seeds == [6]


class TestConfigFiles:
    """Test JSON and YAML parsing and schema validation"""

    def test_yaml(self, tmp_path, small_config_dict):
        path = tmp_path / 'experiment.yaml'
        path.write_text(yaml.safe_dump(small_config_dict))
        config = load_config(str(path))
        assert config.dataset.name == 'blobs'
        assert config.teacher.layer_sizes == [16, 5, 5, 3]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match='not found'):
            load_config(str(tmp_path / 'nope.json'))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"seeds": [1,')
        with pytest.raises(ConfigError, match='Cannot parse'):
            read_config_file(path)

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / 'list.yaml'
        path.write_text('- 1\n- 2\n')
        with pytest.raises(ConfigError, match='mapping'):
            read_config_file(path)

    def test_schema_reports_key_path(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'student': {'degree': -1}}))
        with pytest.raises(ConfigError, match='Invalid config at student.degree'):
            load_config(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'distill': {'alpha': 0.5, 'beta': 1}}))
        with pytest.raises(ConfigError, match='distill'):
            load_config(str(path))

    def test_unknown_method_rejected(self, small_config_file):
        with pytest.raises(ConfigError):
            load_config(str(small_config_file), methods=['exact'])


class TestPaths:
    """Test relative path resolution"""

    def test_relative_to_config_dir(self, tmp_path):
        path = tmp_path / 'cfg' / 'experiment.json'
        path.parent.mkdir()
        path.write_text(json.dumps({'dataset': {'train_images': 'data/train.idx'}}))
        config = load_config(str(path))
        assert config.dataset.train_images == str(path.parent.resolve() / 'data' / 'train.idx')

    def test_relative_to_data_dir(self, tmp_path, monkeypatch):
        path = tmp_path / 'experiment.json'
        path.write_text(json.dumps({
            'dataset': {'test_labels': 'labels.idx'},
            'teacher': {'source': 'model', 'model_path': 'teacher.json'},
        }))
        monkeypatch.setenv('KOOPMAN_DISTILL_DATA_DIR', '/srv/mnist')
        config = load_config(str(path))
        assert config.dataset.test_labels == '/srv/mnist/labels.idx'
        assert config.teacher.model_path == '/srv/mnist/teacher.json'

    def test_absolute_paths_kept(self, small_config_file, small_config_dict):
        config = load_config(str(small_config_file))
        assert config.dataset.train_images == small_config_dict['dataset']['train_images']


class TestValidateConfig:
    """Test run-start file checks"""

    def test_existing_files(self, small_config_file):
        validate_config(load_config(str(small_config_file)))

    def test_missing_files_listed(self, small_config_dict, tmp_path):
        small_config_dict['dataset']['test_images'] = str(tmp_path / 'gone.idx')
        config = ExperimentConfig.from_dict(small_config_dict)
        with pytest.raises(ConfigError) as exc:
            validate_config(config)
        assert 'dataset.test_images' in exc.value.details

    def test_unset_dataset(self):
        with pytest.raises(ConfigError, match='dataset.train_images is not set'):
            validate_config(ExperimentConfig())
        validate_config(ExperimentConfig(), require_dataset=False)

    def test_missing_model_file(self, small_config_dict, tmp_path):
        small_config_dict['teacher'].update({'source': 'model', 'model_path': str(tmp_path / 't.json')})
        with pytest.raises(ConfigError) as exc:
            validate_config(ExperimentConfig.from_dict(small_config_dict))
        assert 'teacher.model_path' in exc.value.details


class TestExperimentConfig:
    """Test cross-section consistency"""

    def test_logits_source_drops_naive_by_default(self):
        config = ExperimentConfig.from_dict({'teacher': {'source': 'logits', 'logits_path': 'x.json'}})
        assert config.methods == ['naive-pca', 'distill']
        config.validate()

    def test_logits_source_rejects_naive(self):
        config = ExperimentConfig.from_dict({
            'teacher': {'source': 'logits', 'logits_path': 'x.json'},
            'methods': ['naive'],
        })
        with pytest.raises(ConfigError, match="needs the teacher's weights"):
            config.validate()

    def test_output_width_must_match_classes(self):
        config = ExperimentConfig.from_dict({'teacher': {'layer_sizes': [4, 3, 5]}})
        with pytest.raises(ConfigError, match='num_classes'):
            config.validate()

    def test_round_trip(self, small_config_dict):
        config = ExperimentConfig.from_dict(small_config_dict)
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again.to_dict() == config.to_dict()


class TestSeedList:
    """Test seed list parsing"""

    def test_forms(self):
        assert parse_seed_list('1,2,3') == [1, 2, 3]
        assert parse_seed_list('0-4') == [0, 1, 2, 3, 4]
        assert parse_seed_list('0-1, 7') == [0, 1, 7]

    def test_invalid(self):
        with pytest.raises(ConfigError):
            parse_seed_list('one')
