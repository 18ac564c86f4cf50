"""
Contract tests for 'train-teacher' and 'export-logits'
"""

import numpy as np

from koopman_distill.teacher import import_logits, load_teacher
from tests.conftest import parse_json_output


class TestTrainTeacherCommand:
    """Test suite for koopman-distill train-teacher"""

    def test_help(self, cli_runner):
        """Test that train-teacher is available"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, ['train-teacher', '--help'])
        assert result.exit_code == 0
        assert 'Train the teacher MLP' in result.output

    def test_trains_and_saves(self, cli_runner, small_config_file, tmp_path):
        """Test JSON output and the written model file"""
        from koopman_distill.cli import cli

        out = tmp_path / 'models' / 'teacher.json'
        result = cli_runner.invoke(cli, [
            'train-teacher', '--config', str(small_config_file),
            '--seed', '2', '--epochs', '3', '--out', str(out), '--json',
        ])

        assert result.exit_code == 0
        output = parse_json_output(result)
        assert output['success'] is True
        assert output['data']['seed'] == 2
        assert len(output['data']['epochs']) == 3
        assert 0.0 <= output['data']['test_accuracy'] <= 1.0
        assert load_teacher(out).architecture.layer_sizes == (16, 5, 5, 3)

    def test_same_seed_same_model(self, cli_runner, small_config_file, tmp_path):
        """Test that a fixed seed reproduces the teacher bit for bit"""
        from koopman_distill.cli import cli

        paths = [tmp_path / 'a.json', tmp_path / 'b.json']
        for path in paths:
            result = cli_runner.invoke(cli, [
                'train-teacher', '--config', str(small_config_file), '--out', str(path),
            ])
            assert result.exit_code == 0
        assert paths[0].read_text() == paths[1].read_text()

    def test_missing_dataset_is_config_error(self, cli_runner, tmp_path):
        """Test exit code 2 when no dataset is configured"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, ['train-teacher', '--out', str(tmp_path / 't.json'), '--json'])
        assert result.exit_code == 2
        output = parse_json_output(result)
        assert output['success'] is False
        assert output['error_type'] == 'config'

    def test_corrupt_idx_is_data_error(self, cli_runner, small_config_dict, tmp_path):
        """Test exit code 3 on a malformed IDX file"""
        import json

        from koopman_distill.cli import cli

        bad = tmp_path / 'bad.idx'
        bad.write_bytes(b'\x00\x00\x08\x01' + bytes(12))
        small_config_dict['dataset']['train_images'] = str(bad)
        config_path = tmp_path / 'bad-config.json'
        config_path.write_text(json.dumps(small_config_dict))

        result = cli_runner.invoke(cli, [
            'train-teacher', '--config', str(config_path), '--out', str(tmp_path / 't.json'), '--json',
        ])
        assert result.exit_code == 3
        assert parse_json_output(result)['error_type'] == 'idx'


class TestExportLogitsCommand:
    """Test suite for koopman-distill export-logits"""

    def test_exports_train_split(self, cli_runner, small_config_file, teacher_file, tmp_path, synthetic_dataset):
        """Test that exported logits match the teacher's forward pass"""
        from koopman_distill.cli import cli

        out = tmp_path / 'logits.json'
        result = cli_runner.invoke(cli, [
            'export-logits', str(teacher_file), '--config', str(small_config_file),
            '--out', str(out), '--json',
        ])

        assert result.exit_code == 0
        output = parse_json_output(result)
        assert output['data']['count'] == 120
        assert output['data']['classes'] == 3
        logits = import_logits(out)
        expected = load_teacher(teacher_file).predict_logits(synthetic_dataset['train_features'])
        np.testing.assert_array_equal(logits.logits, expected)

    def test_test_split_and_provenance(self, cli_runner, small_config_file, teacher_file, tmp_path):
        """Test --split test and --provenance"""
        from koopman_distill.cli import cli

        out = tmp_path / 'test-logits.json'
        result = cli_runner.invoke(cli, [
            'export-logits', str(teacher_file), '--config', str(small_config_file),
            '--split', 'test', '--provenance', 'resnet run 7', '--out', str(out),
        ])

        assert result.exit_code == 0
        logits = import_logits(out)
        assert logits.count == 45
        assert logits.provenance == 'resnet run 7'

    def test_rejects_student_file(self, cli_runner, small_config_file, train_logits_file, tmp_path):
        """Test exit code 3 when the model is not a teacher file"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, [
            'export-logits', str(train_logits_file), '--config', str(small_config_file),
            '--out', str(tmp_path / 'x.json'), '--json',
        ])
        assert result.exit_code == 3
        assert parse_json_output(result)['error_type'] == 'model_file'
