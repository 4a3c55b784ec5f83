import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collision import (
    COST_TABLE_LINES,
    CollisionSpec,
    best_r_on_grid,
    charged_generic_cost,
    element_distinctness_model,
    element_distinctness_spec,
    generic_cost,
    graph_collision_model,
    h_copy_exponent,
    h_copy_model,
    isolation_rounds,
    optimal_exponent,
    reduce_to_unique,
    relation_spec,
    run_generic_cost_model,
    solve_collision,
    triangle_model,
)
from graph_core import Graph, OracleSession
from utils.run_utils import DomainError, PromiseError, iceil


def _session(n: int = 4, seed: int = 0) -> OracleSession:
    return OracleSession(values=[0] * n, rng_seed=seed)


def test_cost_table_exponents():
    assert optimal_exponent(COST_TABLE_LINES["element-distinctness"])[0] == pytest.approx(2 / 3)
    assert optimal_exponent(COST_TABLE_LINES["graph-collision"])[0] == pytest.approx(2 / 3)
    value, rho = optimal_exponent(COST_TABLE_LINES["triangle"])
    assert value == pytest.approx(1.3)
    assert rho == pytest.approx(0.6)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_h_copy_exponent_does_not_depend_on_d(d):
    value, rho = h_copy_exponent(4, d)
    assert value == pytest.approx(1.5)


@pytest.mark.parametrize("k", range(4, 9))
def test_h_copy_exponent_general(k):
    for d in range(1, k):
        assert h_copy_exponent(k, d)[0] == pytest.approx(2 - 2 / k)


def test_generic_cost_formula():
    db = element_distinctness_model()
    n, r = 1000, 100
    assert generic_cost(n, 2, r, db) == pytest.approx(r + (n / r) * math.sqrt(r))
    with pytest.raises(DomainError):
        generic_cost(n, 2, n, db)
    with pytest.raises(DomainError):
        generic_cost(n, 2, 0, db)


def test_h_copy_model_needs_positive_degree():
    with pytest.raises(DomainError):
        h_copy_model(100, 0)


def test_empty_relation_rejects_and_charges_closed_form():
    spec = relation_spec(50, 2, [])
    db = element_distinctness_model()
    session = _session()
    assert run_generic_cost_model(session, spec, db, 10) is None
    assert session.ledger.total() == charged_generic_cost(50, 2, 10, db)
    assert session.ledger.total() == 10 + iceil(5) * (0 + iceil(math.sqrt(10)))


def test_unique_pair_found_within_twice_the_formula():
    n = 10**4
    r = iceil(n ** (2 / 3))
    spec = relation_spec(n, 2, [(17, 4242)])
    db = element_distinctness_model()
    session = _session()
    assert run_generic_cost_model(session, spec, db, r) == (17, 4242)
    assert session.ledger.total() <= 2 * generic_cost(n, 2, r, db)


def test_promise_violation():
    spec = element_distinctness_spec([1, 2, 1, 2])
    session = _session()
    with pytest.raises(PromiseError):
        run_generic_cost_model(session, spec, element_distinctness_model(), 2)
    assert session.ledger.total() == 0
    assert run_generic_cost_model(session, spec, element_distinctness_model(), 2, require_unique=False) == (1, 3)


def test_relation_spec_validation():
    with pytest.raises(DomainError):
        relation_spec(5, 2, [(1, 6)])
    with pytest.raises(DomainError):
        relation_spec(5, 2, [(1, 2, 3)])


@given(st.integers(4, 200), st.integers(2, 3), st.data())
@settings(max_examples=50, deadline=None)
def test_ledger_equals_closed_form(n, k, data):
    r = data.draw(st.integers(1, n - 1))
    for db in (element_distinctness_model(), triangle_model(n), h_copy_model(n, 2)):
        session = _session()
        run_generic_cost_model(session, relation_spec(n, k, []), db, r)
        assert session.ledger.total() == charged_generic_cost(n, k, r, db)


def test_reduce_to_unique_basics():
    empty = relation_spec(16, 2, [])
    assert all(not list(s.effective()) for s in reduce_to_unique(empty, 1))

    single = relation_spec(16, 2, [(3, 9)])
    rounds = reduce_to_unique(single, 1)
    assert len(rounds) == isolation_rounds(16, 2) + 1
    assert list(rounds[0].effective()) == [(3, 9)]


@given(st.integers(0, 2**63))
@settings(max_examples=50, deadline=None)
def test_restrictions_stay_inside_the_relation(seed):
    collisions = [(1, 2), (3, 4), (5, 7), (2, 8)]
    spec = relation_spec(8, 2, collisions)
    for restricted in reduce_to_unique(spec, seed):
        kept = list(restricted.effective())
        assert set(kept) <= set(collisions)
        assert all(restricted.holds(t) for t in kept)


def test_isolation_frequency():
    spec = relation_spec(16, 2, [(2 * i + 1, 2 * i + 2) for i in range(8)])
    isolated = 0
    for seed in range(1000):
        sizes = [len(list(s.effective())) for s in reduce_to_unique(spec, seed)]
        isolated += 1 in sizes
    assert isolated / 1000 >= 0.75


def test_solve_collision_returns_a_collision_deterministically():
    collisions = [(1, 5), (2, 9), (4, 7)]
    spec = relation_spec(12, 2, collisions)
    results = []
    for _ in range(2):
        session = _session(seed=3)
        results.append((solve_collision(session, spec, graph_collision_model(), 5), session.ledger.entries))
    assert results[0] == results[1]
    assert results[0][0] in collisions


def test_solve_collision_rejects_empty_relation():
    session = _session()
    assert solve_collision(session, relation_spec(12, 2, []), graph_collision_model(), 5) is None
    assert session.ledger.total() > 0


def test_callable_relation():
    spec = CollisionSpec(6, 2, relation=lambda t: t == (2, 4), collisions=lambda: iter([(2, 4)]))
    db = element_distinctness_model()
    assert run_generic_cost_model(_session(), spec, db, 3) == (2, 4)


@pytest.mark.parametrize(
    "name, n, k, exponent",
    [
        ("element-distinctness", 10**9, 2, 2 / 3),
        ("graph-collision", 10**9, 2, 2 / 3),
        ("triangle", 10**15, 2, 0.6),
    ],
)
def test_best_r_near_stated_optimum(name, n, k, exponent):
    models = {
        "element-distinctness": element_distinctness_model(),
        "graph-collision": graph_collision_model(),
        "triangle": triangle_model(n),
    }
    db = models[name]
    grid = [2 ** (e / 8) for e in range(0, 8 * int(math.log2(n)))]
    best = best_r_on_grid(n, k, db, grid)
    assert 0.5 <= best / n ** exponent <= 2


def test_best_r_needs_grid():
    with pytest.raises(DomainError):
        best_r_on_grid(10, 2, element_distinctness_model(), [10, 20])


def test_graph_cost_model_on_graph_session():
    session = OracleSession(graph=Graph.complete(5))
    spec = relation_spec(5, 2, [(1, 2)])
    assert run_generic_cost_model(session, spec, graph_collision_model(), 2) == (1, 2)


@pytest.mark.parametrize("d", [2, 3])
def test_h_copy_cost_at_stated_r_is_near_minimum(d):
    # k=4 时最优指数 1.5 在 r ∈ [n^(2/3), n^(3/4)] 上取到，n^(1-1/k) 是其端点
    n, k = 10**9, 4
    db = h_copy_model(n, d)
    grid = [2 ** (e / 8) for e in range(0, 8 * int(math.log2(n)))]
    best = best_r_on_grid(n, k - 1, db, grid)
    stated = n ** (1 - 1 / k)
    assert generic_cost(n, k - 1, stated, db) <= 2 * generic_cost(n, k - 1, best, db)
    assert n ** (2 / 3) / 2 <= best <= 2 * stated
    assert h_copy_exponent(k, d)[0] == pytest.approx(2 - 2 / k)
