import numpy as np
import pytest

from mwulp.sparse import Graph


def make_graph(n, edges, **kw):
    return Graph.from_edges(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2), **kw)


def nx_to_graph(g, n_left=None):
    nodes = sorted(g.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    edges = [(index[u], index[v]) for u, v in g.edges()]
    return make_graph(len(nodes), edges, n_left=n_left)


@pytest.fixture
def edge():
    return make_graph(2, [(0, 1)])


@pytest.fixture
def k3():
    return make_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def star4():
    """Star S_4: center 0 with four leaves."""
    return make_graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def p3():
    return make_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def k22():
    return make_graph(4, [(0, 2), (0, 3), (1, 2), (1, 3)], n_left=2)


def planted_instance(seed, n_max=200, m_max=200):
    """Random sparse mixed instance with a planted point ``x*``.

    Packing rows are scaled so ``P x* <= 1`` and covering rows so
    ``C x* >= 1``; the instance is feasible by construction.
    """
    import scipy.sparse as sp

    from mwulp.model import CsbOperator, MixedInstance
    from mwulp.sparse import CooMatrix

    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, n_max + 1))
    mp = int(rng.integers(1, m_max + 1))
    mc = int(rng.integers(1, m_max + 1))
    x_star = rng.uniform(0.1, 1.0, n)

    def rand_rows(m):
        dens = min(1.0, rng.uniform(2.0, 8.0) / n)
        a = sp.random(m, n, density=dens, random_state=rng, format="lil")
        # every row gets an entry, every column appears somewhere
        a[np.arange(m), rng.integers(0, n, m)] = rng.uniform(0.1, 1.0, m)
        return a.tocsr()

    P = rand_rows(mp)
    cols = sp.csr_matrix((rng.uniform(0.1, 1.0, n), (rng.integers(0, mp, n), np.arange(n))),
                         shape=(mp, n))
    P = (P + cols).tocsr()
    C = rand_rows(mc)
    P = sp.diags(1.0 / ((P @ x_star) * rng.uniform(1.0, 1.5, mp))) @ P
    C = sp.diags(1.0 / ((C @ x_star) * rng.uniform(0.5, 1.0, mc))) @ C
    inst = MixedInstance(CsbOperator.from_coo(CooMatrix.from_scipy(P)),
                         CsbOperator.from_coo(CooMatrix.from_scipy(C)))
    return inst, P.toarray(), C.toarray(), x_star


ACCEPTANCE_LINES: list[str] = []


def report_criterion(k, ok, detail=""):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
