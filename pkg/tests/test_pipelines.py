"""Tests for the assembled discovery pipelines."""

import numpy as np
import pytest

from tailcausal.errors import FitError
from tailcausal.evaluation import bootstrap_structure_ci, reachability_distance
from tailcausal.graphs import Dag, reachability
from tailcausal.models import NoiseSpec, WeightedDag, sample_lscm, sample_rmlm
from tailcausal.pipelines import (
    causev_pipeline,
    ease_pipeline,
    fit_tails,
    make_structure_pipeline,
    rmlm_pipeline,
    tree_pipeline,
)
from tailcausal.tailstats import SeriesTable

DIAMOND = Dag(4, {(1, 2), (1, 3), (2, 4), (3, 4)})
DIAMOND_TRUTH = reachability(DIAMOND)
CHAIN = Dag(3, {(1, 2), (2, 3)})


def unit_weights(dag, kind):
    return WeightedDag(dag, {e: 1.0 for e in dag.edges}, kind)


@pytest.fixture(scope="module")
def diamond_lscm():
    wd = unit_weights(DIAMOND, "linear")
    return sample_lscm(wd, NoiseSpec("pareto", alpha=2.5), 50_000, seed=11)


@pytest.fixture(scope="module")
def diamond_rmlm():
    wd = unit_weights(DIAMOND, "maxlinear")
    return sample_rmlm(wd, NoiseSpec("frechet", alpha=2.0), 50_000, seed=12)


@pytest.fixture(scope="module")
def chain_rmlm():
    wd = unit_weights(CHAIN, "maxlinear")
    return sample_rmlm(wd, NoiseSpec("frechet", alpha=2.0), 20_000, seed=5)


def with_dates(table, start="2000-01-01"):
    dates = (np.datetime64(start) + np.arange(table.n)).astype("datetime64[D]")
    return SeriesTable(table.values, table.names, dates=dates)


class TestEasePipeline:
    def test_recovers_the_diamond(self, diamond_lscm):
        res = ease_pipeline(diamond_lscm)
        assert res.method == "ease" and res.score_kind == "gamma"
        assert res.order[0] == 1 and res.order[-1] == 4
        assert np.array_equal(res.reach, DIAMOND_TRUTH)
        assert res.names == ("X1", "X2", "X3", "X4")

    def test_tight_threshold_prunes_edges(self, diamond_lscm):
        res = ease_pipeline(diamond_lscm, edge_threshold=1e-6)
        assert res.reach.sum() == 4


@pytest.fixture(scope="module")
def pair_table():
    wd = unit_weights(Dag(2, {(1, 2)}), "maxlinear")
    return sample_rmlm(wd, NoiseSpec("frechet", alpha=2.0), 6000, seed=99)


class TestCausevPipeline:
    def test_pairwise_decision_and_closure(self, pair_table):
        res = causev_pipeline(pair_table, n_boot=50, seed=5)
        cell = res.cells["X1->X2"]
        assert cell["decision"] == "x->y" and cell["ci"][0] > 0.5
        assert res.reach.tolist() == [[1, 1], [0, 1]]
        assert res.scores[0, 1] + res.scores[1, 0] == pytest.approx(1.0, abs=1e-12)

    def test_seed_required(self, pair_table):
        with pytest.raises(ValueError, match="seed"):
            causev_pipeline(pair_table, n_boot=50)

    def test_failing_pair_is_named(self):
        rng = np.random.default_rng(0)
        small = SeriesTable(rng.random((80, 2)) + 1.0, ["A", "B"])
        with pytest.raises(FitError, match="pair A / B"):
            causev_pipeline(small, n_boot=20, seed=1)

    def test_closure_spans_chained_decisions(self):
        wd = unit_weights(CHAIN, "maxlinear")
        table = sample_rmlm(wd, NoiseSpec("frechet", alpha=2.0), 8000, seed=41)
        res = causev_pipeline(table, n_boot=40, seed=2)
        if res.cells["X1->X2"]["decision"] == "x->y" and (
            res.cells["X2->X3"]["decision"] == "x->y"
        ):
            assert res.reach[0, 2] == 1


class TestRmlmPipeline:
    def test_recovers_the_diamond(self, diamond_rmlm):
        res = rmlm_pipeline(diamond_rmlm)
        assert np.array_equal(res.reach, DIAMOND_TRUTH)
        assert res.score_kind == "ml_Bbar"
        assert res.meta["k_exceed"] == 500
        assert sorted(res.order) == [1, 2, 3, 4]

    def test_explicit_order_bypasses_the_ordering_step(self, diamond_rmlm):
        res = rmlm_pipeline(diamond_rmlm, order=(1, 2, 3, 4))
        assert res.order == (1, 2, 3, 4)
        assert np.array_equal(res.reach, DIAMOND_TRUTH)


class TestTreePipeline:
    def test_recovers_the_chain(self, chain_rmlm):
        res = tree_pipeline(chain_rmlm)
        assert res.meta["edges"] == [(1, 2), (2, 3)]
        assert np.array_equal(res.reach, reachability(CHAIN))
        assert res.order == (1, 2, 3)

    def test_forced_root_still_spans(self, chain_rmlm):
        res = tree_pipeline(chain_rmlm, root=3)
        edges = res.meta["edges"]
        assert len(edges) == 2
        out_degree = {v: sum(1 for i, _ in edges if i == v) for v in (1, 2, 3)}
        assert out_degree[3] == 0
        assert out_degree[1] == out_degree[2] == 1
        assert res.reach[:, 2].tolist() == [1, 1, 1]


class TestFitTails:
    def test_per_column_fits(self, diamond_lscm):
        fits = fit_tails(diamond_lscm, 0.95)
        assert set(fits) == set(diamond_lscm.names)
        for fit in fits.values():
            assert 0.1 < fit.xi < 0.7
            assert fit.n_exceed == 2500

    def test_declustering_reduces_exceedances(self, diamond_lscm):
        raw = fit_tails(diamond_lscm, 0.95)
        declustered = fit_tails(diamond_lscm, 0.95, decluster_gap=2)
        for name in diamond_lscm.names:
            assert declustered[name].n_exceed <= raw[name].n_exceed
            assert declustered[name].threshold == raw[name].threshold

    def test_failures_name_the_column(self):
        rng = np.random.default_rng(1)
        tiny = SeriesTable(rng.random((40, 1)), ["only"])
        with pytest.raises(FitError, match="column only"):
            fit_tails(tiny, 0.95)


class TestStructurePipelineFactory:
    def test_factory_matches_direct_call(self, diamond_lscm):
        pipe = make_structure_pipeline("ease", edge_threshold=0.1)
        direct = ease_pipeline(diamond_lscm, edge_threshold=0.1)
        assert np.array_equal(pipe(diamond_lscm), direct.reach)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="unknown discovery method"):
            make_structure_pipeline("pc")

    def test_bootstrap_interval_through_the_factory(self, chain_rmlm):
        dated = with_dates(chain_rmlm)
        ci = bootstrap_structure_ci(
            make_structure_pipeline("tree"),
            dated,
            reachability(CHAIN),
            n_boot=10,
            seed=21,
        )
        assert ci.n_boot_effective == 10
        assert 0.0 <= ci.ci_low <= ci.ci_high <= 6.0

    def test_distance_zero_for_exact_recovery(self, diamond_lscm):
        res = ease_pipeline(diamond_lscm)
        assert reachability_distance(res.reach, DIAMOND_TRUTH).distance == 0
