import numpy as np
import pytest
from oracle_utils import nearest_psd_2x2_grid

from gclab.dirichlet import energy_spatial
from gclab.errors import ConfigError, DimensionError
from gclab.graphs import Graph, block_diagonal
from gclab.nn import Model, build_propagation
from gclab.projection import ProjectionPolicy, apply_policy, project_positive
from gclab.rng import CounterRng


class TestProjectPositive:
    def test_identity_unchanged(self):
        assert np.allclose(project_positive(np.eye(3)), np.eye(3), atol=1e-12)

    def test_swap_matrix(self):
        out = project_positive(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)

    def test_negative_identity_to_zero(self):
        assert np.allclose(project_positive(-np.eye(4)), np.zeros((4, 4)), atol=1e-12)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            project_positive(np.ones((2, 3)))

    def test_min_eigenvalue_nonnegative(self):
        rng = CounterRng(1)
        for n in (2, 5, 16, 32):
            w = rng.uniform_signed((n, n), 2.0)
            out = project_positive(w)
            assert np.linalg.eigvalsh(out).min() >= -1e-10
            assert np.array_equal(out, out.T)

    def test_idempotent(self):
        rng = CounterRng(3)
        for _ in range(10):
            w = rng.uniform_signed((8, 8), 2.0)
            once = project_positive(w)
            twice = project_positive(once)
            assert np.abs(twice - once).max() < 1e-10

    def test_nonsymmetric_projects_symmetrized(self):
        rng = CounterRng(5)
        w = rng.uniform_signed((6, 6), 2.0)
        sym = 0.5 * (w + w.T)
        assert np.allclose(project_positive(w), project_positive(sym), atol=1e-12)

    def test_matches_grid_oracle_2x2(self):
        rng = CounterRng(7)
        for _ in range(20):
            w = rng.uniform_signed((2, 2), 2.0)
            ours = project_positive(w)
            oracle = nearest_psd_2x2_grid(0.5 * (w + w.T))
            assert np.abs(ours - oracle).max() < 1e-6

    def test_energy_never_increases_under_projection(self):
        # one linear propagation step H -> P H W on a fixed graph: swapping a
        # symmetric mixed-spectrum W for its PSD projection cannot raise the
        # Dirichlet energy of the output
        rng = CounterRng(9)
        for _ in range(20):
            n = 5 + int(rng.integers(4))
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.uniform() < 0.5]
            g = Graph(np.ones((n, 1)), edges, label=0)
            block = block_diagonal([g])
            prop = build_propagation(block, "gcn", "norm_adjacency").toarray()
            d = 4
            h = rng.uniform_signed((n, d), 1.0)
            w = rng.uniform_signed((d, d), 1.0)
            w = 0.5 * (w + w.T)
            before = energy_spatial(prop @ h @ w, g)
            after = energy_spatial(prop @ h @ project_positive(w), g)
            assert after <= before + 1e-10


class TestApplyPolicy:
    def make_model(self, seed=11):
        return Model(in_dim=3, hidden=6, num_classes=2, kind="gin", num_layers=3, seed=seed)

    def test_none_is_noop(self):
        model = self.make_model()
        before = [p.data.copy() for p in model.parameters()]
        apply_policy(model, ProjectionPolicy(target="none"))
        for b, p in zip(before, model.parameters()):
            assert np.array_equal(b, p.data)

    def test_w2_only(self):
        model = self.make_model()
        w1_before = [layer.w1.data.copy() for layer in model.layers]
        apply_policy(model, ProjectionPolicy(target="w2_only"))
        for layer, w1 in zip(model.layers, w1_before):
            assert np.array_equal(layer.w1.data, w1)
            assert np.linalg.eigvalsh(layer.w2.data).min() >= -1e-10

    def test_w1_and_w2(self):
        model = self.make_model()
        apply_policy(model, ProjectionPolicy(target="w1_and_w2"))
        for layer in model.layers:
            assert np.linalg.eigvalsh(layer.w1.data).min() >= -1e-10
            assert np.linalg.eigvalsh(layer.w2.data).min() >= -1e-10

    def test_layer_subset(self):
        model = self.make_model()
        w2_before = [layer.w2.data.copy() for layer in model.layers]
        apply_policy(model, ProjectionPolicy(target="w2_only", layers=[1]))
        assert np.array_equal(model.layers[0].w2.data, w2_before[0])
        assert not np.array_equal(model.layers[1].w2.data, w2_before[1])
        assert np.array_equal(model.layers[2].w2.data, w2_before[2])

    def test_double_application_is_noop(self):
        model = self.make_model()
        apply_policy(model, ProjectionPolicy(target="w2_only"))
        once = [layer.w2.data.copy() for layer in model.layers]
        apply_policy(model, ProjectionPolicy(target="w2_only"))
        for layer, prev in zip(model.layers, once):
            assert np.abs(layer.w2.data - prev).max() < 1e-10

    def test_grad_state_untouched(self):
        model = self.make_model()
        for p in model.parameters():
            p.grad = np.full_like(p.data, 7.0)
        apply_policy(model, ProjectionPolicy(target="w1_and_w2"))
        for p in model.parameters():
            assert np.array_equal(p.grad, np.full_like(p.data, 7.0))

    def test_frequency_gate(self):
        policy = ProjectionPolicy(target="w2_only", frequency=3)
        assert policy.due(3) and policy.due(6)
        assert not policy.due(1) and not policy.due(2)
        none = ProjectionPolicy(target="none")
        assert not none.due(1)

    def test_bad_policy_rejected(self):
        with pytest.raises(ConfigError):
            ProjectionPolicy(target="everything")
        with pytest.raises(ConfigError):
            ProjectionPolicy(target="w2_only", frequency=0)
