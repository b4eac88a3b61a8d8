import logging

from celery import shared_task

from . import runner

logger = logging.getLogger(__name__)


@shared_task(name='experiments.run_seed')
def run_seed(config, seed, out_dir):
    """One seed of a validated config, dispatched to the experiments queue"""
    logger.info('seed %d of %s into %s', seed, config['name'], out_dir)
    return runner.run_seed(config, seed, out_dir)
