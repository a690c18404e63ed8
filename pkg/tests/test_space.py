import numpy as np
import numpy.testing as npt
import pytest

from darts_plus.space import (
    ARCH_STEP,
    EVAL,
    ArchParams,
    Cell,
    CellKind,
    CellSpec,
    Conv,
    Linear,
    MixedEdge,
    OpKind,
    SpaceConfig,
    Supernet,
    cell_forward,
    count_learnable_params,
    mixed_edge_forward,
    reduction_layers,
    supernet_forward,
)
from darts_plus.tensor import Graph, Tensor, adam_state, adam_step, finite_diff_check


def softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


class TestOpKind:
    def test_default_candidates(self):
        assert len(SpaceConfig().candidates) == 8
        assert {op for op in OpKind if op.learnable} == {
            OpKind.SEP_CONV_3X3,
            OpKind.SEP_CONV_5X5,
            OpKind.DIL_CONV_3X3,
            OpKind.DIL_CONV_5X5,
        }

    def test_candidates_sorted_canonically(self):
        config = SpaceConfig(candidates=[OpKind.SEP_CONV_3X3, OpKind.ZERO, OpKind.SKIP_CONNECT])
        assert config.candidates == [OpKind.ZERO, OpKind.SKIP_CONNECT, OpKind.SEP_CONV_3X3]

    def test_duplicate_candidates_rejected(self):
        with pytest.raises(ValueError):
            SpaceConfig(candidates=[OpKind.ZERO, OpKind.ZERO])

    @pytest.mark.parametrize("stride", [1, 2])
    def test_every_op_keeps_shapes_consistent(self, stride, rng):
        edge = MixedEdge(3, stride, list(OpKind), rng)
        x = Tensor(rng.standard_normal((2, 3, 6, 6)))
        weights = Tensor(np.full(8, 1.0 / 8))
        out = mixed_edge_forward(Graph(), x, edge, weights, ARCH_STEP)
        assert out.shape == (2, 3, 6 // stride, 6 // stride)


class TestCellSpec:
    def test_edges_are_forward(self):
        spec = CellSpec(7)
        assert spec.num_edges == 14
        assert all(i < j for i, j in spec.edges)
        assert list(spec.intermediate_nodes) == [2, 3, 4, 5]

    def test_incoming_by_source(self):
        spec = CellSpec(5)
        assert [spec.edges[e][0] for e in spec.incoming(3)] == [0, 1, 2]

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            CellSpec(3)

    def test_reduction_strides(self):
        spec = CellSpec(5, CellKind.REDUCE)
        assert [spec.stride(i) for i in range(3)] == [2, 2, 1]
        assert CellSpec(5).stride(0) == 1


class TestMixedEdge:
    def test_uniform_zero_and_skip_halves_input(self, rng):
        edge = MixedEdge(2, 1, [OpKind.ZERO, OpKind.SKIP_CONNECT], rng)
        x = rng.standard_normal((1, 2, 3, 3))
        g = Graph()
        weights = g.forward_op("softmax", [Tensor(np.zeros(2))], axis=0)
        out = mixed_edge_forward(g, Tensor(x), edge, weights, EVAL)
        npt.assert_allclose(out.data, 0.5 * x, atol=1e-15)

    def test_saturated_skip_is_identity(self, rng):
        edge = MixedEdge(2, 1, [OpKind.ZERO, OpKind.SKIP_CONNECT], rng)
        x = rng.standard_normal((1, 2, 3, 3))
        g = Graph()
        weights = g.forward_op("softmax", [Tensor([0.0, 30.0])], axis=0)
        out = mixed_edge_forward(g, Tensor(x), edge, weights, EVAL)
        npt.assert_allclose(out.data, x, atol=1e-9)

    def test_matches_hand_summed_combination(self, rng):
        edge = MixedEdge(2, 1, [OpKind.ZERO, OpKind.SKIP_CONNECT, OpKind.AVG_POOL_3X3], rng)
        alpha = rng.standard_normal(3)
        x = rng.standard_normal((1, 2, 2, 2))
        g = Graph()
        weights = g.forward_op("softmax", [Tensor(alpha)], axis=0)
        out = mixed_edge_forward(g, Tensor(x), edge, weights, EVAL)

        p = softmax(alpha)
        # on a 2x2 input every 3x3 window covers all four pixels
        pooled = np.broadcast_to(x.mean(axis=(2, 3), keepdims=True), x.shape)
        npt.assert_allclose(out.data, p[1] * x + p[2] * pooled, atol=1e-14)

    def test_alpha_step_favours_fitting_op(self):
        # logits that already classify the batch correctly, behind a {Zero, Skip} edge
        rng = np.random.default_rng(0)
        labels = np.array([0, 1, 1, 0])
        logits = np.where(np.eye(2)[labels] > 0, 3.0, -3.0)[:, :, None, None]
        edge = MixedEdge(2, 1, [OpKind.ZERO, OpKind.SKIP_CONNECT], rng)
        alpha = Tensor.parameter(np.zeros(2))
        g = Graph()
        weights = g.forward_op("softmax", [alpha], axis=0)
        out = mixed_edge_forward(g, Tensor(logits), edge, weights, EVAL)
        loss = g.forward_op("cross_entropy", [g.forward_op("global_avg_pool", [out])], labels=labels)
        g.backward(loss)
        adam_step(adam_state(lr=1e-2, weight_decay=0.0), [alpha])
        assert alpha.data[1] - alpha.data[0] > 0.0


class TestCell:
    def test_zero_favoured_cell_outputs_zeros(self, rng):
        spec = CellSpec(4)
        cell = Cell(spec, 2, 2, 2, False, [OpKind.ZERO, OpKind.SKIP_CONNECT], rng, preprocess=False)
        table = Tensor(np.tile([100.0, 0.0], (spec.num_edges, 1)))
        x = Tensor(rng.standard_normal((1, 2, 3, 3)))
        out = cell_forward(Graph(), (x, x), cell, table, EVAL)
        npt.assert_allclose(out.data, 0.0, atol=1e-30)

    def test_skip_only_cell_doubles_per_node(self, rng):
        spec = CellSpec(6)
        cell = Cell(spec, 2, 2, 2, False, [OpKind.SKIP_CONNECT], rng, preprocess=False)
        table = Tensor(np.zeros((spec.num_edges, 1)))
        x = rng.standard_normal((1, 2, 3, 3))
        out = cell_forward(Graph(), (Tensor(x), Tensor(x)), cell, table, EVAL)
        # node j sums every earlier state: 2x, 4x, 8x
        npt.assert_allclose(out.data, np.concatenate([2.0 * x, 4.0 * x, 8.0 * x], axis=1), atol=1e-14)

    def test_output_channels(self, rng):
        spec = CellSpec(5)
        cell = Cell(spec, 2, 2, 3, False, list(OpKind), rng)
        table = Tensor(np.zeros((spec.num_edges, 8)))
        x = Tensor(rng.standard_normal((2, 2, 4, 4)))
        out = cell_forward(Graph(), (x, x), cell, table, ARCH_STEP)
        assert out.shape == (2, spec.num_intermediate * 3, 4, 4)

    def test_reduction_cell_halves_resolution(self, rng):
        spec = CellSpec(4, CellKind.REDUCE)
        cell = Cell(spec, 2, 2, 4, False, list(OpKind), rng)
        table = Tensor(np.zeros((spec.num_edges, 8)))
        x = Tensor(rng.standard_normal((2, 2, 6, 6)))
        assert cell_forward(Graph(), (x, x), cell, table, ARCH_STEP).shape == (2, 4, 3, 3)


class TestSupernet:
    def setup_method(self):
        self.space = SpaceConfig(channels=2, layers=2, num_nodes=4, stem_multiplier=1, num_classes=3)
        self.net = Supernet(self.space, np.random.default_rng(7))
        self.arch = ArchParams.initialize(4, self.space.candidates, np.random.default_rng(8))

    def test_logit_shape(self):
        x = Tensor(np.random.default_rng(0).standard_normal((3, 1, 8, 8)))
        assert supernet_forward(Graph(), x, self.net, self.arch).shape == (3, 3)

    def test_zero_input_gives_zero_logits(self):
        logits = supernet_forward(Graph(), Tensor(np.zeros((2, 1, 8, 8))), self.net, self.arch)
        npt.assert_array_equal(logits.data, np.zeros((2, 3)))

    def test_identical_images_identical_rows(self):
        image = np.random.default_rng(1).standard_normal((1, 1, 8, 8))
        logits = supernet_forward(Graph(), Tensor(np.concatenate([image, image])), self.net, self.arch)
        npt.assert_allclose(logits.data[0], logits.data[1], rtol=1e-12)

    def test_same_seed_same_logits(self):
        x = Tensor(np.random.default_rng(2).standard_normal((2, 1, 8, 8)))
        other = Supernet(self.space, np.random.default_rng(7))
        npt.assert_array_equal(
            supernet_forward(Graph(), x, self.net, self.arch).data,
            supernet_forward(Graph(), x, other, self.arch).data,
        )

    def test_architecture_is_not_a_weight(self):
        ids = {id(p) for p in self.net.parameters()}
        assert not ids & {id(p) for p in self.arch.parameters()}

    def test_reduction_layers(self):
        assert reduction_layers(8) == {2, 5}
        assert reduction_layers(5) == {1, 3}

    @pytest.mark.parametrize("seed", range(20))
    def test_alpha_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        space = SpaceConfig(channels=2, layers=2, num_nodes=4, stem_multiplier=1, num_classes=3)
        net = Supernet(space, rng)
        arch = ArchParams.initialize(4, space.candidates, rng, scale=0.5)
        images = Tensor(rng.standard_normal((3, 1, 8, 8)))
        labels = rng.integers(0, 3, size=3)

        def loss(g):
            return g.forward_op("cross_entropy", [net(g, images, arch, ARCH_STEP)], labels=labels)

        assert finite_diff_check(loss, arch.parameters(), h=1e-6) < 1e-4
        assert finite_diff_check(loss, net.classifier.parameters()) < 1e-4

    @pytest.mark.parametrize("seed", range(20))
    def test_weight_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        space = SpaceConfig(channels=2, layers=2, num_nodes=4, stem_multiplier=1, num_classes=3)
        net = Supernet(space, rng)
        arch = ArchParams.initialize(4, space.candidates, rng, scale=0.5)
        images = Tensor(rng.standard_normal((3, 1, 8, 8)))
        labels = rng.integers(0, 3, size=3)

        def loss(g):
            return g.forward_op("cross_entropy", [net(g, images, arch, ARCH_STEP)], labels=labels)

        # stem, cell convs, depthwise kernels, batch-norm affine and classifier;
        # a step of 1e-7 keeps relu and max-pool kinks out of the stencil
        params = net.parameters()
        assert len(params) > len(net.classifier.parameters())
        assert finite_diff_check(loss, params, h=1e-7, floor=1e-5, max_checks=3, seed=seed) < 1e-3


class TestArchSharing:
    def setup_method(self):
        self.space = SpaceConfig(channels=2, layers=5, num_nodes=4, stem_multiplier=1, num_classes=2)
        self.net = Supernet(self.space, np.random.default_rng(3))
        self.arch = ArchParams.initialize(4, self.space.candidates, np.random.default_rng(4), scale=0.3)
        self.images = Tensor(np.random.default_rng(5).standard_normal((2, 1, 8, 8)))

    def _trace(self):
        trace = []
        self.net.features(Graph(), self.images, self.arch, EVAL, trace)
        return [t.data.copy() for t in trace]

    def test_every_normal_cell_reads_the_shared_table(self):
        g = Graph()
        self.net.features(g, self.images, self.arch, EVAL)
        normal_softmax = [n.output for n in g.nodes if n.op.tag == "softmax" and n.inputs[0] is self.arch.normal]
        assert len(normal_softmax) == 1
        rows = [n for n in g.nodes if n.op.tag == "row" and n.inputs[0] is normal_softmax[0]]
        normal_cells = [c for c in self.net.cells if c.kind is CellKind.NORMAL]
        assert len(normal_cells) == 3
        assert len(rows) == len(normal_cells) * CellSpec(4).num_edges

    def test_perturbing_reduce_table_spares_first_normal_cell(self):
        before = self._trace()
        self.arch.reduce.data[0, 3] += 2.0
        after = self._trace()
        npt.assert_array_equal(before[0], after[0])
        assert not np.array_equal(before[1], after[1])
        assert not np.array_equal(before[3], after[3])

    def test_perturbing_normal_table_changes_normal_cells(self):
        before = self._trace()
        self.arch.normal.data[1, 4] += 2.0
        after = self._trace()
        for layer in (0, 2, 4):
            assert not np.array_equal(before[layer], after[layer])


class TestParamCount:
    def test_linear(self, rng):
        assert count_learnable_params(Linear(3, 2, rng)) == 8

    def test_conv(self, rng):
        assert count_learnable_params(Conv(4, 4, 3, rng)) == 144

    def test_tiny_supernet_tally(self, rng):
        space = SpaceConfig(
            channels=2,
            layers=1,
            num_nodes=4,
            stem_multiplier=1,
            num_classes=2,
            candidates=[OpKind.ZERO, OpKind.SKIP_CONNECT],
        )
        # stem 18 + 4, two preprocess blocks 2 * (8 + 8),
        # two strided skip projections 2 * (16 + 8), classifier 8 + 2
        assert count_learnable_params(Supernet(space, rng)) == 22 + 32 + 48 + 10


class TestRestrictedCandidates:
    def test_forward(self, skip_zero_space, rng):
        net = Supernet(skip_zero_space, rng)
        arch = ArchParams.initialize(skip_zero_space.num_nodes, skip_zero_space.candidates, rng)
        assert arch.normal.data.shape == (CellSpec(4).num_edges, 3)
        logits = supernet_forward(Graph(), Tensor(rng.standard_normal((2, 1, 6, 6))), net, arch)
        assert logits.data.shape == (2, 2)
        assert np.all(np.isfinite(logits.data))

    def test_zero_dominated_cells_ignore_the_input(self, skip_zero_space, rng):
        net = Supernet(skip_zero_space, rng)
        table = np.zeros((CellSpec(4).num_edges, 3))
        table[:, 0] = 60.0
        arch = ArchParams.from_arrays(table, table, skip_zero_space.candidates, 4)
        logits = supernet_forward(Graph(), Tensor(rng.standard_normal((3, 1, 6, 6))), net, arch)
        npt.assert_allclose(logits.data, np.broadcast_to(logits.data[0], logits.data.shape), atol=1e-12)
