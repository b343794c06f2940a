import math
import os

import pytest

from skewdyn.core import DeckProperties

os.environ.setdefault("SKEWDYN_THREADS", "1")

# lines collected by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES = []


def example1(skew_deg=20.0):
    """15 m slab deck."""
    return DeckProperties(span_length=15.0, elastic_modulus=3.2e10, poisson_ratio=0.25,
                          second_moment=0.4987, torsion_constant=1.7067, mass_per_length=22500.0,
                          gyration_radius=0.2354, skew_angle=math.radians(skew_deg),
                          damping_ratio=0.02)


def example2(skew_deg=10.0):
    """24 m box girder."""
    return DeckProperties(span_length=24.0, elastic_modulus=3.2e10, poisson_ratio=0.25,
                          second_moment=1.3921, torsion_constant=2.6741, mass_per_length=9774.0,
                          gyration_radius=0.5967, skew_angle=math.radians(skew_deg),
                          damping_ratio=0.01)


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def ex2():
    return example2()


@pytest.fixture
def straight1():
    return example1(0.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
