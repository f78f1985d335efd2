import warnings

import pytest
from hypothesis import HealthCheck, settings

from turfsim.config import TEN_AREA_REVENUES, CityConfig, DuplicateGapWarning

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def three_city(eta: float = 15.0, horizon: float = 2000.0, seed: int = 0, **kw) -> CityConfig:
    return CityConfig.from_revenues(
        (30.0, 20.0, 10.0), n_ocgs=3, departure_rate=eta, collision_cost=1.0, horizon=horizon, seed=seed, **kw
    )


def ten_area_city(eta: float = 10.0, horizon: float = 2000.0, seed: int = 0, **kw) -> CityConfig:
    return CityConfig.from_revenues(
        TEN_AREA_REVENUES, n_ocgs=10, departure_rate=eta, collision_cost=5.0, horizon=horizon, seed=seed, **kw
    )


@pytest.fixture(autouse=True)
def _quiet_duplicate_gaps():
    # the three-area test city has equal gaps on purpose
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateGapWarning)
        yield


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
