import numpy as np
import pytest

from ddregister import paper_register


@pytest.fixture(scope="session")
def cfg():
    return paper_register()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240831)


def full_hamiltonian(cfg):
    """Independent oracle: the register Hamiltonian built from the lab-frame form."""
    from ddregister.linalg import SX, SZ, tensor
    from ddregister.register import KHZ_TO_RAD_PER_US

    n = cfg.n_nuclei
    s0, s1 = cfg.spin_projections
    ze = np.diag([s0, s1]).astype(complex)
    dim = 2 ** (n + 1)
    h = np.zeros((dim, dim), dtype=complex)
    for i, spec in enumerate(cfg.nuclei):
        ops_z = [np.eye(2, dtype=complex)] * (n + 1)
        ops_z[i + 1] = SZ
        h += (cfg.omega_larmor / 2) * tensor(ops_z)
        a_par = spec.a_par_khz * KHZ_TO_RAD_PER_US
        a_perp = spec.a_perp_khz * KHZ_TO_RAD_PER_US
        for a, sigma in ((a_par, SZ), (a_perp, SX)):
            ops = [np.eye(2, dtype=complex)] * (n + 1)
            ops[0] = ze
            ops[i + 1] = sigma
            h += (a / 2) * tensor(ops)
    return h


@pytest.fixture(scope="session")
def hamiltonian_oracle():
    return full_hamiltonian


def pytest_runtest_logreport(report):
    """One pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    if hasattr(report, "wasxfail"):
        verdict = "FAIL (expected: documented spec defect, see decisions ledger)"
    else:
        verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {verdict}")
