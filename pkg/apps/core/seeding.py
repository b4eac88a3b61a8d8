"""
Master-seed fan-out.

Every random stream of a run is a numpy Generator keyed by the tuple
(master seed, stream tag, counter). The counter is the round index for
per-round streams (the stochastic encoder) and 0 for whole-run streams
(scenario generation), so repetitions in different rounds are independent
and any single round can be replayed on its own.
"""
import zlib

import numpy as np

SCENARIO_STREAM = 'scenario'
ENCODER_STREAM = 'encoder'
VERIFY_STREAM = 'verify'


def stream_key(tag):
    """Stable 32-bit key for a stream tag"""
    return zlib.crc32(tag.encode('utf-8'))


def derive_rng(master_seed, tag, counter=0):
    """Generator for one (seed, stream, counter) triple"""
    entropy = [int(master_seed), stream_key(tag), int(counter)]
    return np.random.default_rng(np.random.SeedSequence(entropy))
