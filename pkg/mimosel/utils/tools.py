import numpy as np


def db_to_linear(x):
    return 10 ** (np.asarray(x, dtype=float) / 10)


def linear_to_db(x):
    return 10 * np.log10(x)


def derive_rng(seed, *keys):
    """PCG64 generator for the stream (seed, *keys).

    Streams with different keys are statistically independent, so a grid
    point gets the same draws whatever order the grid is evaluated in.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(keys))
    return np.random.Generator(np.random.PCG64(sequence))
