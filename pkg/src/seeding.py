import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
# sub-stream of a replication seed reserved for classifier fits; data and splits use the replication seed itself
CLASSIFIER_STREAM = 2 ** 32


def derive_seed(seed: int, index: int) -> int:
    """
    Derive the seed of sub-stream ``index`` from a master seed.

    seed_r = seed XOR (GOLDEN_GAMMA * (index + 1)) with 64-bit wrap-around, so sub-streams can be
    evaluated in any order (or in parallel) and still be reproduced bit for bit.
    """

    if index < 0:
        raise ValueError(f"index must be nonnegative, got {index}")
    return (int(seed) & MASK64) ^ ((GOLDEN_GAMMA * (int(index) + 1)) & MASK64)


def make_rng(seed: int, index: int = None) -> np.random.Generator:
    if index is not None:
        seed = derive_seed(seed, index)
    return np.random.default_rng(int(seed) & MASK64)
