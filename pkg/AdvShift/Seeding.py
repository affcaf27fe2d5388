"""
Named random streams derived from one integer seed.

Every consumer asks for a stream by name; the stream is a Philox (counter-based)
generator keyed by SeedSequence([seed, crc32(name)]), so the numbers a consumer sees
do not depend on which other streams were drawn from first, or in which order sweep
jobs run.

Stream names in use: init, batches, data, resample, diagnostics, bench.
"""
import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """
    :param seed: Root seed (any non-negative integer up to 64 bits)
    :param name: Stream name
    :return: Independent generator for (seed, name)
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), key])))
