"""Shared fixtures: expensive scenario runs execute once per session."""
import time

import pytest

from reductcheck.scenarios import run_scenario


def _timed(name, **kw):
    t0 = time.perf_counter()
    result = run_scenario(name, **kw)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sho_run():
    return _timed("reduction_sho", seed=0)


@pytest.fixture(scope="session")
def quartic_run():
    return _timed("reduction_quartic", seed=0)


@pytest.fixture(scope="session")
def superposition_run():
    return _timed("superposition_counterexample", seed=0)


@pytest.fixture(scope="session")
def symmetry_run():
    return _timed("symmetry_checks", seed=0)


@pytest.fixture(scope="session")
def transitivity_run():
    return _timed("transitivity_chain", seed=0)


@pytest.fixture(scope="session")
def pure_decoherence_run():
    return _timed("pure_decoherence", seed=0)


@pytest.fixture(scope="session")
def open_ehrenfest_run():
    return _timed("open_ehrenfest", seed=0)


@pytest.fixture(scope="session")
def histories_trivial_run():
    return _timed("histories_trivial", seed=0)


@pytest.fixture(scope="session")
def histories_branching_run():
    return _timed("histories_branching", seed=0)


@pytest.fixture(scope="session")
def bohmian_run():
    return _timed("bohmian_two_packet", seed=0)


@pytest.fixture(scope="session")
def relativity_run():
    return _timed("relativity_contraction", seed=0)


@pytest.fixture(scope="session")
def spreading_run():
    return _timed("spreading_persistence", seed=0)
