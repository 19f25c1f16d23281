import numpy as np
import pytest

from binnedbn.core import (
    CycleError,
    Dag,
    Dataset,
    NetworkModel,
    NodeType,
    is_acyclic,
    parents,
    topological_order,
)
from binnedbn.learning import LgCpd


class TestDag:
    def test_empty_graph_is_acyclic(self):
        assert is_acyclic(Dag(("A", "B")))

    def test_chain_is_acyclic(self):
        assert is_acyclic(Dag("ABC", [("A", "B"), ("B", "C")]))

    def test_three_cycle_is_cyclic(self):
        assert not is_acyclic(Dag("ABC", [("A", "B"), ("B", "C"), ("C", "A")]))

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            Dag("AB", [("A", "A")])

    def test_undeclared_endpoint_rejected(self):
        with pytest.raises(KeyError):
            Dag("AB", [("A", "C")])

    def test_duplicate_arcs_collapse(self):
        dag = Dag("AB", [("A", "B"), ("A", "B")])
        assert len(dag.arcs) == 1

    def test_topological_tie_break_is_declaration_order(self):
        assert topological_order(Dag("ABC", [("A", "B"), ("A", "C")])) == ["A", "B", "C"]

    def test_topological_respects_arcs_over_declaration(self):
        assert topological_order(Dag("AB", [("B", "A")])) == ["B", "A"]

    def test_topological_raises_on_cycle(self):
        with pytest.raises(CycleError):
            topological_order(Dag("AB", [("A", "B"), ("B", "A")]))

    def test_parents_in_declaration_order(self):
        dag = Dag("ABC", [("B", "C"), ("A", "C")])
        assert parents(dag, "C") == ("A", "B")
        assert parents(dag, "A") == ()

    def test_single_parent(self):
        assert Dag("DE", [("D", "E")]).parents("E") == ("D",)

    def test_unknown_node_lookup(self):
        with pytest.raises(KeyError):
            Dag("AB").parents("Z")

    def test_has_path(self):
        dag = Dag("ABCD", [("A", "B"), ("B", "C")])
        assert dag.has_path("A", "C")
        assert not dag.has_path("C", "A")
        assert not dag.has_path("A", "D")

    def test_arc_edits(self):
        dag = Dag("AB").with_arc("A", "B")
        assert dag.arcs == frozenset({("A", "B")})
        assert dag.with_flipped_arc("A", "B").arcs == frozenset({("B", "A")})
        assert dag.without_arc("A", "B").arcs == frozenset()

    def test_random_dags_topologically_consistent(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            names = [f"v{i}" for i in range(n)]
            arcs = [
                (names[i], names[j])
                for i in range(n)
                for j in range(i + 1, n)
                if rng.random() < 0.4
            ]
            dag = Dag(names, arcs)
            order = topological_order(dag)
            assert sorted(order) == sorted(names)
            position = {v: k for k, v in enumerate(order)}
            assert all(position[u] < position[v] for u, v in dag.arcs)


class TestDataset:
    def test_basic_accessors(self):
        ds = Dataset(("x", "y"), np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert ds.n_rows == 2 and ds.n_columns == 2
        np.testing.assert_array_equal(ds.column("y"), [2.0, 4.0])
        np.testing.assert_array_equal(ds.matrix(("y", "x")), [[2.0, 1.0], [4.0, 3.0]])

    def test_rejects_nan_and_inf(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(("x",), np.array([[np.nan]]))
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(("x",), np.array([[np.inf]]))

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="duplicate"):
            Dataset(("x", "x"), np.zeros((1, 2)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset(("x",), np.zeros((0, 1)))

    def test_values_are_immutable(self):
        ds = Dataset(("x",), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            ds.values[0, 0] = 1.0


class TestNetworkModel:
    def _lg(self, child, parents=()):
        n = 1 + len(parents)
        data = np.random.default_rng(0).standard_normal((10, n))
        return LgCpd.fit(child, parents, data)

    def test_parent_mismatch_rejected(self):
        dag = Dag("AB", [("A", "B")])
        cpds = {"A": self._lg("A"), "B": self._lg("B")}
        with pytest.raises(ValueError, match="do not match"):
            NetworkModel(dag, {"A": NodeType.LG, "B": NodeType.LG}, cpds)

    def test_family_mismatch_rejected(self):
        dag = Dag("A")
        with pytest.raises(ValueError, match="family"):
            NetworkModel(dag, {"A": NodeType.CKDE}, {"A": self._lg("A")})

    def test_valid_model_accepted(self):
        dag = Dag("AB", [("A", "B")])
        cpds = {"A": self._lg("A"), "B": self._lg("B", ("A",))}
        model = NetworkModel(dag, {"A": NodeType.LG, "B": NodeType.LG}, cpds)
        assert model.nodes == ("A", "B")
