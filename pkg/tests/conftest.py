import numpy as np
import pytest

from qspill.marketdata import compute_log_returns
from qspill.synthetic import synthetic_panel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_returns():
    """10-asset synthetic returns panel, 600 price dates."""
    return compute_log_returns(synthetic_panel(10, 600, seed=3))


def random_stable_phi(rng, n, p=1, radius=0.6):
    """Random lag matrices whose companion matrix has spectral radius `radius`."""
    phis = [rng.standard_normal((n, n)) for _ in range(p)]
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.hstack(phis)
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    scale = radius / np.abs(np.linalg.eigvals(comp)).max()
    # scaling Phi_k by s^k scales the companion eigenvalues by s
    return [phi * scale ** (k + 1) for k, phi in enumerate(phis)]


def random_psd(rng, n, jitter=0.1):
    A = rng.standard_normal((n, n))
    return A @ A.T / n + jitter * np.eye(n)


def make_returns(R, sectors=None):
    """Wrap a (T, N) array as a ReturnsPanel with business-day dates."""
    import pandas as pd

    from qspill.marketdata import Asset, ReturnsPanel

    R = np.asarray(R, dtype=float)
    sectors = sectors or ["energy"] * R.shape[1]
    assets = tuple(Asset.from_sector7(f"X{i}", s) for i, s in enumerate(sectors))
    return ReturnsPanel(pd.bdate_range("2015-01-01", periods=len(R)), assets, R)


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_acceptance(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
