import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hermite_nmg import grad_normalize, MomentRep, BasisParams, coefficient_count  # noqa: E402


def random_grad_rep(rng, order, scale=0.05, rho=None, u=None, theta=None):
    """A Grad-normalized state close to a Maxwellian."""
    rho = rng.uniform(0.5, 2.0) if rho is None else rho
    theta = rng.uniform(0.6, 1.6) if theta is None else theta
    u = rng.uniform(-0.5, 0.5, 3) if u is None else np.asarray(u, dtype=float)
    n = coefficient_count(order)
    coeffs = np.zeros(n)
    coeffs[0] = rho
    # perturbation sized to the natural scale rho theta^{|alpha|/2}
    from hermite_nmg.hermite_core import multi_indices

    deg = multi_indices(order).sum(axis=1)
    coeffs[1:] = scale * rho * theta ** (deg[1:] / 2.0) * rng.standard_normal(n - 1)
    return grad_normalize(MomentRep(order, BasisParams(u, theta), coeffs))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def lid_problem(n=16, M=3, order=1, knudsen=0.1, **extra):
    """Nondimensional single lid-driven cavity at desk scale."""
    from hermite_nmg.scenarios import build_problem, config_from_dict

    cfg = config_from_dict({"scenario": "single_lid", "M": M, "nx": n, "ny": n, "order": order,
                            "gas": {"knudsen": knudsen}, **extra})
    return build_problem(cfg)


def rel_diff(a, b):
    """Max-norm difference relative to the max-norm of b."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def macro_diff(fa, fb):
    """Worst max-norm relative difference over rho, u, theta, sigma and q."""
    ma, mb = fa.macro(), fb.macro()
    return max(rel_diff(ma[k], mb[k]) for k in ("rho", "u", "theta", "sigma", "q"))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
