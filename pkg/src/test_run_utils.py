from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.combinatorics import colex_subsets, rank_colex, unrank_colex
from utils.run_utils import (
    DomainError,
    HarnessConfig,
    ParseError,
    Stream,
    derive_seed,
    iceil,
    ilog2,
    load_config,
    make_rng,
)


def test_load_config_defaults(monkeypatch):
    monkeypatch.delenv("QTRI_THREADS", raising=False)
    config = load_config()
    assert config == HarnessConfig()
    assert config.epsilon == pytest.approx(3 / 7)


def test_load_config_from_yaml(tmp_path, monkeypatch):
    monkeypatch.delenv("QTRI_THREADS", raising=False)
    path = tmp_path / "config.yaml"
    path.write_text("threads: 2\nfamily: c5_blowup\ngc_grid: [10, 100, 1000]\n", encoding="utf-8")
    config = load_config(path)
    assert config.threads == 2
    assert config.family == "c5_blowup"
    assert config.gc_grid == [10, 100, 1000]
    assert config.to_dict()["family"] == "c5_blowup"


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("thread: 2\n", encoding="utf-8")
    with pytest.raises(DomainError):
        load_config(path)
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.yaml")


def test_env_overrides_threads(tmp_path, monkeypatch):
    path = tmp_path / "config.yaml"
    path.write_text("threads: 2\n", encoding="utf-8")
    monkeypatch.setenv("QTRI_THREADS", "7")
    assert load_config(path).threads == 7
    monkeypatch.setenv("QTRI_THREADS", "many")
    with pytest.raises(DomainError):
        load_config()


@pytest.mark.parametrize(
    "x, expected",
    [(512 ** (2 / 3), 64), (2.0, 2), (2.5, 3), (0.0, 0), (1000 ** (2 / 3), 100)],
)
def test_iceil(x, expected):
    assert iceil(x) == expected


@pytest.mark.parametrize("n, expected", [(1, 1), (2, 1), (3, 2), (1024, 10), (1025, 11)])
def test_ilog2(n, expected):
    assert ilog2(n) == expected


def test_streams_are_deterministic_and_independent():
    a = make_rng(42, Stream.SAMPLE).integers(0, 2**32, size=8)
    b = make_rng(42, Stream.SAMPLE).integers(0, 2**32, size=8)
    c = make_rng(42, Stream.BERNOULLI).integers(0, 2**32, size=8)
    assert (a == b).all()
    assert not (a == c).all()
    assert derive_seed(42, 1) == derive_seed(42, 1) != derive_seed(42, 2)


def test_parse_error_prefix():
    assert str(ParseError("bad token", 4)) == "line 4: bad token"
    assert ParseError("bad").line is None


def test_colex_order():
    assert colex_subsets(4, 2) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    assert rank_colex([2, 0]) == 1
    with pytest.raises(DomainError):
        colex_subsets(2, 3)
    with pytest.raises(DomainError):
        rank_colex([-1, 2])


@given(st.integers(1, 20), st.data())
@settings(max_examples=100, deadline=None)
def test_colex_rank_round_trip(n, data):
    k = data.draw(st.integers(0, n))
    rank = data.draw(st.integers(0, comb(n, k) - 1))
    subset = unrank_colex(rank, k)
    assert len(subset) == k and all(0 <= a < n for a in subset)
    assert rank_colex(subset) == rank
