import math

import numpy as np
import pytest


def cosine_oracle(a, b):
    """Independent elementwise cosine used to cross-check the fast paths."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return max(-1.0, min(1.0, dot / (na * nb)))


def auroc_pairs_oracle(pos, neg):
    """Brute-force Mann-Whitney pair counting (ties count half)."""
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
