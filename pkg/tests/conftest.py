import os
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from model_web import WebSpec  # noqa: E402

small_rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def distinct_q_sets(min_size=3, max_size=5):
    """Strategy for lists of pairwise distinct small rationals."""
    return st.lists(small_rationals, min_size=min_size, max_size=max_size, unique=True)


@pytest.fixture
def web3():
    return WebSpec.default(3)


@pytest.fixture
def web4():
    return WebSpec.default(4)


@pytest.fixture
def random_web5():
    return WebSpec((Fraction(-3, 2), Fraction(1, 3), Fraction(2), Fraction(5, 7), Fraction(-4)))


def seeded_q_values(d, seed=0):
    """d pairwise distinct rationals drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    values = []
    while len(values) < d:
        q = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 8)))
        if q not in values:
            values.append(q)
    return tuple(values)
