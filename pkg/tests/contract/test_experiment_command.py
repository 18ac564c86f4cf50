"""
Contract tests for 'experiment' and 'pca-report'
"""

import csv

from koopman_distill.error_handler import DivergenceError
from tests.conftest import parse_json_output


class TestExperimentCommand:
    """Test suite for koopman-distill experiment"""

    def test_full_run(self, cli_runner, small_config_file, small_config_dict):
        """Test summaries in JSON and the written reports"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, ['experiment', '--config', str(small_config_file), '--json'])

        assert result.exit_code == 0
        data = parse_json_output(result)['data']
        assert data['partial'] is False
        assert data['errors'] == []
        methods = [s['method'] for s in data['summaries']]
        assert methods == ['teacher', 'naive', 'naive-pca', 'distill']
        for summary in data['summaries']:
            assert summary['count'] == 2

        with open(data['csv'], newline='') as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 8
        assert rows[0]['method'] == 'teacher' and rows[0]['dict_size'] == ''

    def test_seed_method_and_out_overrides(self, cli_runner, small_config_file, tmp_path):
        """Test --seed, --method, --pca-dim and --out"""
        from koopman_distill.cli import cli

        out_dir = tmp_path / 'custom-reports'
        result = cli_runner.invoke(cli, [
            'experiment', '--config', str(small_config_file),
            '--seed', '4', '--seed', '5', '--method', 'naive-pca', '--pca-dim', '2',
            '--out', str(out_dir), '--json',
        ])

        assert result.exit_code == 0
        with open(out_dir / 'results.csv', newline='') as f:
            rows = list(csv.DictReader(f))
        assert [(r['seed'], r['method']) for r in rows] == [
            ('4', 'teacher'), ('4', 'naive-pca'), ('5', 'teacher'), ('5', 'naive-pca'),
        ]
        assert rows[1]['pca_dim'] == '2' and rows[1]['dict_size'] == '6'

    def test_partial_run_exits_one(self, cli_runner, small_config_file, mocker):
        """Test that a failing cell is reported and the exit code is 1"""
        from koopman_distill.cli import cli

        mocker.patch('koopman_distill.harness.train_student', side_effect=DivergenceError(0, 3))
        result = cli_runner.invoke(cli, [
            'experiment', '--config', str(small_config_file), '--seed', '0', '--json',
        ])

        assert result.exit_code == 1
        data = parse_json_output(result)['data']
        assert data['partial'] is True
        assert data['errors'][0]['method'] == 'distill'
        assert 'diverged' in data['errors'][0]['error']

    def test_human_table(self, cli_runner, small_config_file):
        """Test the Rich summary table"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, [
            'experiment', '--config', str(small_config_file), '--seed', '0', '--method', 'naive-pca',
        ])
        assert result.exit_code == 0
        assert 'naive-pca' in result.output

    def test_invalid_config_exits_two(self, cli_runner, tmp_path):
        """Test exit code 2 for a schema violation"""
        from koopman_distill.cli import cli

        path = tmp_path / 'bad.yaml'
        path.write_text('student:\n  degree: -2\n')
        result = cli_runner.invoke(cli, ['experiment', '--config', str(path), '--json'])
        assert result.exit_code == 2
        assert 'student.degree' in parse_json_output(result)['error']


class TestPcaReportCommand:
    """Test suite for koopman-distill pca-report"""

    def test_report(self, cli_runner, small_config_file):
        """Test components and required D per ratio"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, [
            'pca-report', '--config', str(small_config_file), '--max-dim', '5',
            '--ratio', '0.5', '--ratio', '0.9', '--json',
        ])

        assert result.exit_code == 0
        data = parse_json_output(result)['data']
        assert data['samples'] == 120 and data['features'] == 16
        assert len(data['components']) == 5
        assert set(data['required']) == {'0.5', '0.9'}
        assert 1 <= data['required']['0.5'] <= data['required']['0.9'] <= 6

    def test_default_ratios(self, cli_runner, small_config_file):
        """Test the default ratio list"""
        from koopman_distill.cli import cli

        result = cli_runner.invoke(cli, ['pca-report', '--config', str(small_config_file), '--json'])
        assert result.exit_code == 0
        assert set(parse_json_output(result)['data']['required']) == {'0.8', '0.9', '0.95', '0.99'}
