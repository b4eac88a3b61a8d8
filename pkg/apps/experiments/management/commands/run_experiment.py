import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import VERIFICATION_FAILED_EXIT_CODE, DocoError
from apps.experiments.config import load_config_file, parse_sweep
from apps.experiments.persistence import default_output_dir, fail_run, finish_run, start_run
from apps.experiments.runner import run_experiment, run_sweep

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run a seeded simulation from a JSON config and write its traces, summary and manifest'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='path to the experiment config (JSON)')
        parser.add_argument('--seeds', type=int, help='number of seeds (overrides the config)')
        parser.add_argument('--out', help='output directory (default: DOCO_OUTPUT_DIR/<name>/<config hash>)')
        parser.add_argument('--verify', action='store_true', help='check every invariant suite on the traces')
        parser.add_argument('--sweep', help='key=v1,v2,... with a dotted config key')

    def handle(self, *args, **options):
        try:
            config = load_config_file(options['config'])
            if options['seeds'] is not None and options['seeds'] < 1:
                raise CommandError('--seeds must be at least 1', returncode=2)
            out_dir = Path(options['out']) if options['out'] else default_output_dir(config)
            if options['sweep']:
                key, values = parse_sweep(options['sweep'])
                rows = run_sweep(config, key, values, out_dir, options['seeds'])
                self.stdout.write(self.style.SUCCESS(f'swept {key} over {len(rows)} values into {out_dir}'))
                return
            self.run_and_record(config, out_dir, options['seeds'], options['verify'])
        except DocoError as exc:
            logger.error('%s error: %s', exc.category, exc)
            raise CommandError(f'{exc.category} error: {exc}', returncode=exc.exit_code) from exc

    def run_and_record(self, config, out_dir, seeds, verify):
        record = start_run(config, out_dir)
        try:
            summary, report = run_experiment(config, out_dir, seeds=seeds, verify=verify)
        except DocoError as exc:
            fail_run(record, exc)
            raise
        finish_run(record, summary, report)

        for seed_summary in summary['runs']:
            regrets = ', '.join(f'{name}={value:.6g}' for name, value in seed_summary['regret'].items())
            self.stdout.write(f"seed {seed_summary['seed']}: {regrets}")
        self.stdout.write(f'wrote {len(summary["runs"])} traces to {out_dir}')
        if report is None:
            return
        for result in report.failures:
            self.stderr.write(f'FAILED {result.name}: worst slack {result.worst_slack}')
        if not report.passed:
            raise CommandError(f'{len(report.failures)} invariants failed; see {out_dir / "verification.json"}',
                               returncode=VERIFICATION_FAILED_EXIT_CODE)
        self.stdout.write(self.style.SUCCESS(f'all {len(report.results)} invariants hold'))
