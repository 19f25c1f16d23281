import numpy as np
import pytest

from binnedbn.core import Dag, NodeType, topological_order
from binnedbn.learning import HcConfig, fit, loglik
from binnedbn.synth import (
    Exponential,
    GaussianMixture,
    GenerativeSpec,
    SamplingError,
    build_synthetic,
    sample,
)

# (nodes, arcs, max parents) per model.
CHARACTERISTICS = {
    1: (7, 10, 3),
    2: (13, 21, 5),
    3: (8, 7, 1),
    4: (15, 14, 1),
    5: (7, 10, 3),
    6: (8, 7, 1),
    7: (7, 10, 3),
    8: (8, 7, 1),
}


class TestStructures:
    @pytest.mark.parametrize("model_id", sorted(CHARACTERISTICS))
    def test_table_characteristics(self, model_id):
        spec = build_synthetic(model_id)
        n_nodes, n_arcs, max_parents = CHARACTERISTICS[model_id]
        assert len(spec.dag.nodes) == n_nodes
        assert len(spec.dag.arcs) == n_arcs
        assert max(len(spec.dag.parents(v)) for v in spec.dag.nodes) == max_parents

    def test_shared_arc_structures(self):
        one, three = build_synthetic(1).dag, build_synthetic(3).dag
        for model_id, reference in ((5, one), (7, one), (6, three), (8, three)):
            dag = build_synthetic(model_id).dag
            assert dag.nodes == reference.nodes
            assert dag.arcs == reference.arcs

    def test_gaussian_models_mix_families(self):
        for model_id in (1, 2, 3, 4):
            tags = set(build_synthetic(model_id).types.values())
            assert tags == {NodeType.LG, NodeType.CKDE}

    def test_non_gaussian_models_are_fully_nonparametric(self):
        for model_id in (5, 6, 7, 8):
            spec = build_synthetic(model_id)
            assert all(t is NodeType.CKDE for t in spec.types.values())

    def test_out_of_range_id(self):
        with pytest.raises(ValueError):
            build_synthetic(0)
        with pytest.raises(ValueError):
            build_synthetic(9)


class TestSampling:
    def test_root_mean_of_model_one(self):
        # Node a is N(mu=3, sd=2); the sample mean stays within 3 sigma/sqrt(N).
        data = sample(build_synthetic(1), 100_000, seed=0)
        assert abs(data.column("a").mean() - 3.0) <= 3 * 2.0 / np.sqrt(100_000)

    def test_exponential_model_is_strictly_positive(self):
        data = sample(build_synthetic(5), 20_000, seed=1)
        assert np.all(data.values > 0)

    def test_beta_model_lives_in_unit_interval(self):
        data = sample(build_synthetic(7), 20_000, seed=2)
        assert np.all((data.values > 0) & (data.values < 1))

    def test_same_seed_is_byte_identical(self):
        a = sample(build_synthetic(3), 512, seed=42)
        b = sample(build_synthetic(3), 512, seed=42)
        assert a.values.tobytes() == b.values.tobytes()
        assert a.columns == b.columns

    def test_different_seeds_differ(self):
        a = sample(build_synthetic(3), 128, seed=0)
        b = sample(build_synthetic(3), 128, seed=1)
        assert a.values.tobytes() != b.values.tobytes()

    def test_columns_follow_topological_order(self):
        for model_id in (1, 2, 3, 4, 5, 6, 7, 8):
            spec = build_synthetic(model_id)
            data = sample(spec, 8, seed=0)
            assert list(data.columns) == topological_order(spec.dag)

    def test_mixture_component_frequencies(self):
        # Distinguishable components: counts must match the stated weights.
        mixture = GaussianMixture((0.3, 0.7), (0.0, 100.0), (0.01, 0.01))
        dag = Dag(("v",))
        spec = GenerativeSpec(dag, {"v": mixture}, {"v": NodeType.CKDE})
        values = sample(spec, 100_000, seed=3).column("v")
        share = np.mean(values < 50.0)
        assert abs(share - 0.3) <= 3 * np.sqrt(0.3 * 0.7 / 100_000)

    def test_non_finite_parameter_raises_with_node_name(self):
        bad = Exponential(lambda v: v["a"] * np.inf)
        dag = Dag(("a", "b"), [("a", "b")])
        spec = GenerativeSpec(
            dag,
            {"a": Exponential(1.0), "b": bad},
            {"a": NodeType.CKDE, "b": NodeType.CKDE},
        )
        with pytest.raises(SamplingError, match="'b'"):
            sample(spec, 16, seed=0)

    def test_rate_guard_bounds_exponential_means(self):
        # Rate 1/a with a huge is clamped, keeping samples finite.
        spec = build_synthetic(5)
        data = sample(spec, 50_000, seed=4)
        assert np.all(np.isfinite(data.values))


class TestTrueModelQuality:
    def test_true_structure_beats_empty_graph_on_held_out_data(self):
        spec = build_synthetic(1)
        train = sample(spec, 2000, seed=5)
        test = sample(spec, 500, seed=6)
        config = HcConfig(seed=0)
        truth = fit(spec.dag, spec.types, train, config)
        empty = fit(
            Dag(train.columns), {v: NodeType.LG for v in train.columns}, train, config
        )
        assert loglik(truth, test)[1] > loglik(empty, test)[1]
