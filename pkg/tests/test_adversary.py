import math

import numpy as np
import pytest

from crossnode.adversary import (
    adversarial_gradients,
    conditioning_input,
    discriminator_predict,
    domain_loss,
    init_discriminator,
)
from crossnode.nn import ParamStore, Tensor, backward, finite_difference_check


def test_conditioning_layout_two_by_two():
    emb = Tensor(np.array([[1.0, 2.0]]))
    yhat = Tensor(np.array([[0.5, 0.5]]))
    out = conditioning_input(emb, yhat).data
    np.testing.assert_array_equal(out, [[0.5, 0.5, 1.0, 1.0]])


def test_conditioning_one_hot_places_embedding_at_class_stride():
    emb = Tensor(np.array([[3.0, -1.0, 2.0]]))
    yhat = Tensor(np.array([[0.0, 1.0]]))  # class 1 of 2
    out = conditioning_input(emb, yhat).data[0]
    np.testing.assert_array_equal(out[1::2], [3.0, -1.0, 2.0])
    np.testing.assert_array_equal(out[0::2], [0.0, 0.0, 0.0])


def test_conditioning_zero_embedding_is_zero():
    emb = Tensor(np.zeros((2, 3)))
    yhat = Tensor(np.full((2, 4), 0.25))
    assert (conditioning_input(emb, yhat).data == 0).all()


def test_conditioning_width_is_emb_times_labels():
    rng = np.random.default_rng(0)
    emb = Tensor(rng.random((5, 128)))
    yhat = Tensor(rng.random((5, 6)))
    assert conditioning_input(emb, yhat).data.shape == (5, 768)


def test_discriminator_zero_params_outputs_half():
    params = init_discriminator(np.random.default_rng(0), 3, 2, hidden=(4, 4))
    for layers in (params.mlp, [params.head]):
        for w, b in layers:
            w.data[:] = 0.0
            b.data[:] = 0.0
    cond = Tensor(np.random.default_rng(1).standard_normal((5, 6)))
    d_hat = discriminator_predict(params, cond).data
    np.testing.assert_allclose(d_hat, np.full(5, 0.5))


def test_discriminator_outputs_in_open_unit_interval():
    rng = np.random.default_rng(2)
    params = init_discriminator(rng, 4, 3, hidden=(8, 8))
    cond = Tensor(rng.standard_normal((7, 12)))
    d_hat = discriminator_predict(params, cond).data
    assert ((d_hat > 0) & (d_hat < 1)).all()


def test_discriminator_matches_dense_reference():
    rng = np.random.default_rng(3)
    params = init_discriminator(rng, 3, 2, hidden=(5, 4))
    cond_np = rng.standard_normal((6, 6))
    got = discriminator_predict(params, Tensor(cond_np)).data

    h = cond_np
    for w, b in params.mlp:
        h = np.maximum(h @ w.data + b.data, 0.0)
    w, b = params.head
    logits = h @ w.data + b.data
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    want = (e / e.sum(axis=1, keepdims=True))[:, 1]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_domain_loss_uninformative_is_log2():
    d_hat = Tensor(np.full(6, 0.5))
    d_true = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    assert domain_loss(d_hat, d_true).item() == pytest.approx(math.log(2.0), abs=1e-12)


def test_domain_loss_perfect_discrimination_near_zero():
    d_hat = Tensor(np.array([1e-9, 1e-9, 1.0 - 1e-9, 1.0 - 1e-9]))
    d_true = np.array([0.0, 0.0, 1.0, 1.0])
    assert domain_loss(d_hat, d_true).item() == pytest.approx(0.0, abs=1e-7)


def test_domain_loss_matches_scalar_loop():
    rng = np.random.default_rng(4)
    p = rng.uniform(0.05, 0.95, 8)
    d = (rng.random(8) < 0.5).astype(float)
    got = domain_loss(Tensor(p), d).item()
    want = -sum(
        di * math.log(pi) + (1 - di) * math.log(1 - pi) for pi, di in zip(p, d)
    ) / len(p)
    assert got == pytest.approx(want, abs=1e-12)


def _toy_game(rng):
    """A small conditioned discriminator stack with generator-side leaves."""
    emb = Tensor(rng.standard_normal((6, 3)), name="gen.emb")
    yhat_logits = Tensor(rng.standard_normal((6, 2)), name="gen.yhat")
    from crossnode import nn

    yhat = nn.softmax_rows(yhat_logits)
    disc = init_discriminator(rng, 3, 2, hidden=(4, 4))
    cond = conditioning_input(emb, yhat)
    d_hat = discriminator_predict(disc, cond)
    d_true = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    loss = domain_loss(d_hat, d_true)
    gen_params = {"gen.emb": emb, "gen.yhat": yhat_logits}
    return loss, disc, gen_params


def test_lambda_zero_zeroes_generator_gradients():
    loss, disc, gen = _toy_game(np.random.default_rng(5))
    _, reversed_g = adversarial_gradients(loss, 0.0, disc.named(), gen)
    for g in reversed_g.values():
        np.testing.assert_array_equal(g, np.zeros_like(g))


def test_reversal_sign_law_is_exact():
    loss, disc, gen = _toy_game(np.random.default_rng(6))
    plain = backward(loss)
    lam = 0.37
    disc_g, reversed_g = adversarial_gradients(loss, lam, disc.named(), gen)
    for name, tensor in gen.items():
        np.testing.assert_array_equal(reversed_g[name], -lam * plain[tensor])
    for name, tensor in disc.named().items():
        np.testing.assert_array_equal(disc_g[name], plain[tensor])


def test_gradient_flows_through_both_outer_product_factors():
    loss, disc, gen = _toy_game(np.random.default_rng(7))
    _, reversed_g = adversarial_gradients(loss, 1.0, disc.named(), gen)
    assert np.abs(reversed_g["gen.emb"]).max() > 0
    assert np.abs(reversed_g["gen.yhat"]).max() > 0


def test_negative_lambda_rejected():
    loss, disc, gen = _toy_game(np.random.default_rng(8))
    with pytest.raises(ValueError):
        adversarial_gradients(loss, -0.1, disc.named(), gen)


def test_discriminator_gradients_match_fd():
    rng = np.random.default_rng(9)
    disc = init_discriminator(rng, 3, 2, hidden=(4, 4))
    store = ParamStore(disc.named())
    # zero biases put dead-row pre-activations exactly on the ReLU kink, where
    # finite differences are meaningless; jitter to a generic parameter point
    for t in store.params.values():
        t.data += 0.05 * rng.standard_normal(t.data.shape)
    cond_np = rng.standard_normal((6, 6))
    d_true = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])

    def build(_):
        d_hat = discriminator_predict(disc, Tensor(cond_np))
        return domain_loss(d_hat, d_true)

    analytic = store.gather(backward(build(store)))
    assert finite_difference_check(lambda s: build(s).item(), store, analytic) < 1e-4
