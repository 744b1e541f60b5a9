import numpy as np
import pytest
import scipy.sparse as sp

from gclab import engine
from gclab.engine import (Tensor, backward, clip, div, exp, gather_rows, log,
                          log_softmax, matmul, mul, no_grad, relu,
                          segment_sum, spmm, sqrt, sub, tmean, tsum)
from gclab.errors import DimensionError, NumericsError
from gclab.rng import CounterRng


def rand(rng, shape, scale=2.0):
    return rng.uniform_signed(shape, scale)


class TestForwardValues:
    def test_arith(self):
        a = Tensor([1.0, 2.0])
        b = Tensor([3.0, 4.0])
        assert np.array_equal((a + b).data, [4.0, 6.0])
        assert np.array_equal((a * b).data, [3.0, 8.0])
        assert np.array_equal((a - b).data, [-2.0, -2.0])
        assert np.array_equal((a / b).data, [1.0 / 3.0, 0.5])

    def test_matmul(self):
        a = Tensor(np.eye(2))
        b = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(matmul(a, b).data, b.data)

    def test_segment_sum(self):
        x = Tensor(np.arange(10, dtype=float).reshape(5, 2))
        out = segment_sum(x, [2, 3])
        assert np.array_equal(out.data, [[2.0, 4.0], [18.0, 21.0]])

    def test_gather_rows(self):
        x = Tensor(np.arange(6, dtype=float).reshape(2, 3))
        assert np.array_equal(gather_rows(x, [2, 0]).data, [2.0, 3.0])

    def test_log_softmax_rows_sum_to_one(self):
        z = Tensor(np.array([[100.0, 100.0, 100.0], [5.0, -5.0, 0.0]]))
        p = np.exp(log_softmax(z).data)
        assert np.allclose(p.sum(axis=1), 1.0)
        assert np.allclose(p[0], 1.0 / 3.0)

    def test_nan_guard(self):
        with pytest.raises(NumericsError):
            log(Tensor([-1.0]))

    def test_matmul_requires_2d(self):
        with pytest.raises(DimensionError):
            matmul(Tensor([1.0]), Tensor([1.0]))


class TestBackward:
    def test_sum_of_param_gives_ones(self):
        w = Tensor(np.ones((3, 2)), requires_grad=True)
        backward(tsum(w))
        assert np.array_equal(w.grad, np.ones((3, 2)))

    def test_quadratic_gives_w(self):
        rng = CounterRng(3)
        w = Tensor(rand(rng, (4, 4)), requires_grad=True)
        backward(tsum(mul(w, w)) * 0.5)
        assert np.allclose(w.grad, w.data)

    def test_grad_accumulates_until_zeroed(self):
        w = Tensor(np.ones(3), requires_grad=True)
        backward(tsum(w))
        backward(tsum(w))
        assert np.array_equal(w.grad, 2 * np.ones(3))
        w.zero_grad()
        assert w.grad is None

    def test_broadcast_bias_grad(self):
        b = Tensor(np.zeros(3), requires_grad=True)
        x = Tensor(np.ones((5, 3)))
        backward(tsum(x + b))
        assert np.array_equal(b.grad, 5 * np.ones(3))

    def test_scalar_broadcast_grad(self):
        s = Tensor(np.asarray(2.0), requires_grad=True)
        x = Tensor(np.arange(6, dtype=float).reshape(2, 3))
        backward(tsum(mul(s, x)))
        assert float(s.grad) == pytest.approx(x.data.sum())

    def test_shared_subexpression(self):
        w = Tensor(np.asarray(3.0), requires_grad=True)
        y = mul(w, w)  # used twice below
        backward(y + y)
        assert float(w.grad) == pytest.approx(2 * 2 * 3.0)

    def test_spmm_grad(self):
        a = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        h = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
        backward(tsum(spmm(a, h)))
        assert np.array_equal(h.grad, np.ones((2, 2)))

    def test_no_grad_blocks_recording(self):
        w = Tensor(np.ones(2), requires_grad=True)
        with no_grad():
            y = tsum(mul(w, w))
        assert not y.requires_grad

    def test_backward_without_graph_rejected(self):
        with pytest.raises(NumericsError):
            backward(Tensor(np.asarray(1.0)))


class TestNumericalGradients:
    def check(self, fn, shapes, seed, h=1e-6, tol=1e-6):
        rng = CounterRng(seed)
        params = [Tensor(rand(rng, s, 1.0), requires_grad=True) for s in shapes]
        backward(fn(params))
        for p in params:
            analytic = p.grad.copy()
            flat = p.data.ravel()
            with no_grad():
                for k in range(flat.size):
                    orig = flat[k]
                    flat[k] = orig + h
                    up = fn(params).item()
                    flat[k] = orig - h
                    down = fn(params).item()
                    flat[k] = orig
                    fd = (up - down) / (2 * h)
                    assert analytic.ravel()[k] == pytest.approx(fd, abs=max(tol, tol * abs(fd)))

    def test_composite_chain(self):
        def fn(ps):
            a, b = ps
            return tmean(mul(exp(mul(a, 0.3)), log(clip(b + 3.0, 1e-6, np.inf))))

        self.check(fn, [(3, 2), (3, 2)], seed=101)

    def test_matmul_relu_chain(self):
        def fn(ps):
            w1, w2 = ps
            x = Tensor(CounterRng(999).uniform_signed((4, 3), 1.0))
            return tmean(matmul(relu(matmul(x, w1)), w2))

        self.check(fn, [(3, 3), (3, 2)], seed=103)

    def test_div_sqrt_chain(self):
        def fn(ps):
            (a,) = ps
            num = tsum(mul(a, a), axis=1)
            return tmean(div(num, sqrt(clip(num + 1.0, 1e-12, np.inf))))

        self.check(fn, [(5, 3)], seed=107)

    def test_log_softmax_gather(self):
        labels = np.array([0, 2, 1])

        def fn(ps):
            (z,) = ps
            return -tmean(gather_rows(log_softmax(z), labels))

        self.check(fn, [(3, 3)], seed=109)

    def test_segment_sum_path(self):
        sizes = np.array([2, 3])

        def fn(ps):
            (h,) = ps
            return tmean(mul(segment_sum(h, sizes), segment_sum(h, sizes)))

        self.check(fn, [(5, 2)], seed=113)


class TestStrictChecks:
    def test_can_disable(self):
        engine.strict_checks = False
        try:
            with np.errstate(invalid="ignore"):
                t = log(Tensor([-1.0]))
            assert np.isnan(t.data).any()
        finally:
            engine.strict_checks = True
