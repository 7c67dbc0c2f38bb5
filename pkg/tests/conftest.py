import numpy as np
import pytest

from lqgtrack.model import LiabilityParams, MarketParams, Objective, TimeFunction

ACCEPTANCE_LINES = []


def scalar_market(mu=0.04, sigma=0.2, r=0.0, d=1, rho_cols=None):
    """One risky asset with excess drift ``mu`` and volatility ``sigma`` on the first noise column."""
    sig = np.zeros((1, d))
    sig[0, 0] = sigma
    if rho_cols is not None:
        sig[0, :] = rho_cols
    return MarketParams(r=r, b=[r + mu], sigma_S=sig)


def correlated_instance(T=1.0, gamma1=1.0, gamma2=2.0):
    """n = m = 1 with benchmark noise partly shared with the asset."""
    market = MarketParams(r=0.02, b=[0.08], sigma_S=[[0.25, 0.0]])
    liability = LiabilityParams(alpha=[[0.05]], h=[0.5], y0=[1.5], sigma_Y=[[0.3, 0.4]])
    objective = Objective(gamma1, gamma2, [1.0], [1.0], T)
    return market, liability, objective


def rich_instance(T=2.0):
    """n = m = 2, d = 4, full alpha, correlated benchmark noise and time-varying coefficients."""
    times = [0.0, 1.0, 3.0]
    market = MarketParams(
        r=TimeFunction([0.01, 0.015, 0.02], times=times),
        b=[0.05, 0.07],
        sigma_S=[[0.2, 0.05, 0.0, 0.0], [0.03, 0.25, 0.0, 0.0]],
    )
    liability = LiabilityParams(
        alpha=[[0.02, 0.01], [-0.01, 0.03]],
        h=TimeFunction([[0.3, 0.5], [0.4, 0.2], [0.1, 0.6]], times=times),
        y0=[1.0, 2.0],
        sigma_Y=[[0.05, 0.1, 0.2, 0.0], [0.1, -0.04, 0.0, 0.15]],
    )
    objective = Objective(1.5, 0.7, TimeFunction([[-1.0, 1.0], [-0.8, 1.2], [-1.0, 0.9]], times=times),
                          [-1.0, 1.0], T)
    return market, liability, objective


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
