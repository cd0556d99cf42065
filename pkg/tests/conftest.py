"""Shared test configuration: deterministic hypothesis profile and fixtures."""

import math

import pytest
from hypothesis import HealthCheck, settings

from sirbif import REFERENCE_BASE, ModelParams

settings.register_profile(
    "ci",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def base():
    """The reference base parameter set used throughout the suite."""
    return REFERENCE_BASE


@pytest.fixture(scope="session")
def figure_params():
    """Reference ModelParams with beta = 1.3 (R0 ≈ 2.0429), p free per test."""

    def make(p=0.0, beta=1.3):
        return ModelParams(A=1.1, beta=beta, m=0.35, mu=0.175, d=0.175,
                           g=0.35, p=p)

    return make


def assert_close(actual, expected, *, rel=1e-12, abs_=0.0, label=""):
    """Tight closeness helper with a readable failure message."""
    if not math.isclose(actual, expected, rel_tol=rel, abs_tol=abs_):
        raise AssertionError(
            f"{label or 'value'}: got {actual!r}, want {expected!r} "
            f"(rel_tol={rel}, abs_tol={abs_})")
