import numpy as np
import pytest

from sskgqa import autodiff as ad


def fd_grad(f, x, eps=1e-6):
    """Central finite differences of a scalar function of one array."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy()
        xp[idx] += eps
        xm = x.copy()
        xm[idx] -= eps
        g[idx] = (f(xp) - f(xm)) / (2 * eps)
        it.iternext()
    return g


def check_grad(build, x, tol=1e-6):
    """build(node) -> scalar loss node. Compare autodiff to finite differences."""
    p = ad.parameter(x)
    loss = build(p)
    ad.backward(loss)
    num = fd_grad(lambda v: float(build(ad.parameter(v)).value[0, 0]), x)
    denom = max(np.abs(num).max(), 1.0)
    assert np.abs(p.grad - num).max() / denom < tol


RNG = np.random.default_rng(7)


def test_add_broadcast_and_grad():
    x = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(1, 4))
    check_grad(lambda p: ad.sum_all(ad.mul(ad.add(p, ad.constant(b)), ad.constant(x))), x)
    # gradient wrt the broadcast row sums over rows
    pb = ad.parameter(b)
    loss = ad.sum_all(ad.add(ad.constant(x), pb))
    ad.backward(loss)
    assert np.allclose(pb.grad, np.full((1, 4), 3.0))


@pytest.mark.parametrize(
    "op",
    [
        lambda p: ad.sum_all(ad.relu(p)),
        lambda p: ad.sum_all(ad.sigmoid(p)),
        lambda p: ad.sum_all(ad.logsigmoid(p)),
        lambda p: ad.sum_all(ad.cos(p)),
        lambda p: ad.sum_all(ad.sin(p)),
        lambda p: ad.sum_all(ad.softmax(p)),
        lambda p: ad.sum_all(ad.mul(ad.softmax(p), p)),
        lambda p: ad.l2norm(p),
        lambda p: ad.sum_all(ad.rownorm(p)),
        lambda p: ad.sum_all(ad.rowsum(p)),
        lambda p: ad.sum_all(ad.mean_rows(p)),
        lambda p: ad.sum_all(ad.transpose(p)),
        lambda p: ad.scale(ad.sum_all(p), -2.5),
    ],
)
def test_unary_op_gradients(op):
    x = RNG.normal(size=(3, 4)) + 0.1  # keep relu away from the kink
    check_grad(op, x)


def test_log_gradient():
    x = np.abs(RNG.normal(size=(2, 3))) + 0.5
    check_grad(lambda p: ad.sum_all(ad.log(p)), x)


def test_matmul_gradients():
    a = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(4, 2))
    check_grad(lambda p: ad.sum_all(ad.matmul(p, ad.constant(b))), a)
    check_grad(lambda p: ad.sum_all(ad.matmul(ad.constant(a), p)), b)


def test_sub_mul_gradients():
    a = RNG.normal(size=(2, 5))
    b = RNG.normal(size=(2, 5))
    check_grad(lambda p: ad.sum_all(ad.mul(ad.sub(p, ad.constant(b)), p)), a)


def test_euclid_gradient():
    a = RNG.normal(size=(1, 6))
    b = RNG.normal(size=(1, 6))
    check_grad(lambda p: ad.euclid(p, ad.constant(b)), a)
    check_grad(lambda p: ad.euclid(ad.constant(a), p), b)


def test_euclid_zero_distance_gradient_is_zero():
    a = np.ones((1, 4))
    p = ad.parameter(a)
    loss = ad.euclid(p, ad.constant(a.copy()))
    ad.backward(loss)
    assert p.grad is None or np.allclose(p.grad, 0.0)


def test_split_concat_gradients():
    x = RNG.normal(size=(2, 6))

    def build(p):
        lo, hi = ad.split_halves(p)
        return ad.sum_all(ad.mul(ad.concat_halves(hi, lo), p))

    check_grad(build, x)


def test_complex_mul_matches_numpy_complex():
    a = RNG.normal(size=(3, 8))
    b = RNG.normal(size=(3, 8))
    out = ad.complex_mul(ad.parameter(a), ad.parameter(b)).value
    za = a[:, :4] + 1j * a[:, 4:]
    zb = b[:, :4] + 1j * b[:, 4:]
    zc = za * zb
    assert np.allclose(out[:, :4], zc.real)
    assert np.allclose(out[:, 4:], zc.imag)


def test_complex_mul_gradients():
    a = RNG.normal(size=(2, 6))
    b = RNG.normal(size=(2, 6))
    check_grad(lambda p: ad.sum_all(ad.complex_mul(p, ad.constant(b))), a)
    check_grad(lambda p: ad.sum_all(ad.complex_mul(ad.constant(a), p)), b)


def test_rows_gather_scatter():
    m = RNG.normal(size=(5, 3))
    p = ad.parameter(m)
    out = ad.rows(p, [1, 1, 4])
    loss = ad.sum_all(out)
    ad.backward(loss)
    expected = np.zeros_like(m)
    expected[1] = 2.0
    expected[4] = 1.0
    assert np.allclose(p.grad, expected)


def test_dropout_identity_at_inference():
    rng = np.random.default_rng(0)
    x = ad.parameter(RNG.normal(size=(2, 4)))
    assert ad.dropout(x, 0.5, rng, training=False) is x
    assert ad.dropout(x, 0.0, rng, training=True) is x


def test_dropout_inverted_scaling():
    rng = np.random.default_rng(0)
    x = ad.parameter(np.ones((200, 50)))
    y = ad.dropout(x, 0.5, rng, training=True)
    kept = y.value[y.value > 0]
    assert np.allclose(kept, 2.0)
    assert abs(y.value.mean() - 1.0) < 0.1


def test_grad_accumulates_over_reuse():
    x = np.array([[3.0]])
    p = ad.parameter(x)
    loss = ad.mul(p, p)  # d(x*x)/dx = 2x
    ad.backward(loss)
    assert np.allclose(p.grad, [[6.0]])


def test_backward_requires_scalar():
    p = ad.parameter(np.ones((1, 3)))
    with pytest.raises(ad.ContractError):
        ad.backward(p)


def test_shape_errors():
    with pytest.raises(ad.ShapeError):
        ad.add(ad.constant(np.ones((2, 3))), ad.constant(np.ones((2, 4))))
    with pytest.raises(ad.ShapeError):
        ad.matmul(ad.constant(np.ones((2, 3))), ad.constant(np.ones((2, 3))))
    with pytest.raises(ad.ShapeError):
        ad.split_halves(ad.constant(np.ones((1, 3))))
