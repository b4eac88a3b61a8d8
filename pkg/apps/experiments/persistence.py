"""
Database bookkeeping for experiment runs. Files on disk stay the source of
truth; these rows index them.
"""
import logging
from pathlib import Path

from django.conf import settings
from django.db import transaction
from django.utils import timezone

from .config import config_hash
from .models import ExperimentRun, SeedRun

logger = logging.getLogger(__name__)


def default_output_dir(config):
    return Path(settings.DOCO_OUTPUT_DIR) / config['name'] / config_hash(config)[:12]


def start_run(config, out_dir):
    return ExperimentRun.objects.create(
        name=config['name'],
        config=config,
        config_hash=config_hash(config),
        output_dir=str(out_dir),
        version=settings.DOCO_VERSION,
    )


@transaction.atomic
def finish_run(run, summary, report=None):
    out_dir = Path(run.output_dir)
    for seed_summary in summary['runs']:
        SeedRun.objects.create(
            run=run,
            seed=seed_summary['seed'],
            rounds=seed_summary['rounds'],
            trace_path=str(out_dir / seed_summary['trace']),
            trace_sha256=seed_summary['trace_sha256'],
            cells_path=str(out_dir / seed_summary['cells']) if seed_summary['cells'] else '',
            final_regrets=seed_summary['regret'],
            lag=seed_summary['lag'],
            max_bits=seed_summary['bits']['max_per_node_round'],
        )
    run.summary = summary
    if report is None:
        run.status = 'completed'
    else:
        run.verification = report.as_dict()
        run.status = 'verified' if report.passed else 'verification_failed'
    run.finished_at = timezone.now()
    run.save()
    logger.debug('recorded run %s with %d seeds', run.id, len(summary['runs']))
    return run


def fail_run(run, exc):
    run.status = 'failed'
    run.error = f'{type(exc).__name__}: {exc}'
    run.finished_at = timezone.now()
    run.save(update_fields=['status', 'error', 'finished_at', 'updated_at'])
    return run
