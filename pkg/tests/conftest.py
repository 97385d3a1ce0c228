import numpy as np
import pytest

from crbsense import experiment, measmodel, netmodel, noise


@pytest.fixture(scope="session")
def net():
    return netmodel.bundled_network()


@pytest.fixture(scope="session")
def ybus(net):
    return netmodel.build_ybus(net)


@pytest.fixture(scope="session")
def plan(net):
    return measmodel.default_plan(net, sigma_seed=0)


@pytest.fixture(scope="session")
def compiled(net, ybus, plan):
    return measmodel.compile_plan(net, ybus, plan)


@pytest.fixture(scope="session")
def variants():
    return noise.table1_variants()


@pytest.fixture(scope="session")
def scenarios_100(net, ybus):
    return experiment.generate_scenarios(net, ybus, 100, 42)


@pytest.fixture(scope="session")
def full_study(net, ybus, plan, variants):
    """The headline run: 22 variants, CRB/RMSE over 100 scenarios,
    coverage over 1000, master seed 42."""
    scenarios = experiment.generate_scenarios(net, ybus, 1000, 42)
    result = experiment.run_study(
        net, ybus, plan, variants, scenarios, 42, n_crb=100, n_coverage=1000
    )
    return result, scenarios


def rho_by_variant(result):
    out = {}
    for rep in result.crb_reports:
        out.setdefault(rep.variant_id, []).append(rep)
    return out


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


# one visible pass/fail line per acceptance criterion, emitted after the
# capture machinery is done
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
