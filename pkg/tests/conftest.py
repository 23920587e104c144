import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ustcollide.rng import RngStream
from ustcollide.treemetrics import IntrinsicBall, intrinsic_ball
from ustcollide.wilson import LatticeWilson, WilsonConfig, wilson_infinity_approx

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def _sampler(radius):
    return LatticeWilson(radius)


def sampled_tree(r, i, seed=12345, factor=4.0, **kw):
    cfg = WilsonConfig(region_radius=r, container_factor=factor, order=kw.pop("order", "intrinsic"), **kw)
    return wilson_infinity_approx(cfg, RngStream(seed).child(r).child(i), sampler=_sampler(cfg.container_radius))


def sampled_ball(r, i, seed=12345):
    return intrinsic_ball(sampled_tree(r, i, seed), (0, 0, 0), r)


@pytest.fixture(scope="session")
def small_balls():
    return [sampled_ball(r, i) for r in (3, 6, 10) for i in range(6)]


def line_ball():
    """Members -1, 0, 1 of the integer line with exits -2 and 2."""
    return IntrinsicBall.from_structure([-1, 0, 0], [1, 2])


def hub_ball():
    """Origin of degree 1 hanging from a hub with four leaves and one exit."""
    return IntrinsicBall.from_structure([-1, 0, 1, 1, 1, 1], [1])


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE: list[str] = []


def report(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"CRITERION {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
