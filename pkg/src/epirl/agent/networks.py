"""Policy and value networks with hand-written backward passes.

A mini-batch of K encoded sequences is mapped to one state vector: each
sequence is encoded separately and the K latents are mean-pooled. The policy
head is a two-layer tanh network ending in a softmax over the l SNP actions;
the value head is a separate two-layer tanh network with a scalar output.

Parameters live in plain ``dict`` objects of numpy arrays so the optimiser
and the gradient checker can walk them by name.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import NumericFailureError, PreconditionError


def _uniform(rng, scale, shape):
    return rng.uniform(-scale, scale, size=shape)


def softmax(z):
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


class IdentityEncoder:
    """State = mean encoded genotype profile of the batch."""

    params = {}

    def __init__(self, n_inputs):
        self.n_inputs = n_inputs
        self.out_dim = n_inputs

    def forward(self, x):
        return x.mean(axis=0), x.shape[0]

    def backward(self, cache, dstate):
        K = cache
        return {}, np.broadcast_to(dstate / K, (K, self.n_inputs)).copy()


class ConvEncoder:
    """One 1-D convolution over SNP positions, tanh, then average pooling.

    The encoded row of length ``in_channels * l`` is read as ``in_channels``
    channels laid out SNP-major (one-hot triples), so ``in_channels=1`` takes
    raw codes and ``in_channels=3`` takes one-hot input. Zero "same" padding
    keeps l output positions; ``width`` must be odd.
    """

    def __init__(self, n_inputs, in_channels=1, width=5, channels=8, rng=None, scale=0.1):
        if width % 2 == 0:
            raise PreconditionError(f"convolution width must be odd, got {width}")
        if n_inputs % in_channels:
            raise PreconditionError(
                f"input width {n_inputs} is not divisible by {in_channels} channels"
            )
        rng = np.random.default_rng(rng)
        self.n_inputs = n_inputs
        self.in_channels = in_channels
        self.length = n_inputs // in_channels
        self.width = width
        self.out_dim = channels
        self.params = {
            "conv_w": _uniform(rng, scale, (channels, in_channels, width)),
            "conv_b": np.zeros(channels),
        }

    def _windows(self, x):
        K = x.shape[0]
        xc = x.reshape(K, self.length, self.in_channels).transpose(0, 2, 1)
        pad = self.width // 2
        xp = np.pad(xc, ((0, 0), (0, 0), (pad, pad)))
        return sliding_window_view(xp, self.width, axis=2)  # K, C, l, w

    def forward(self, x):
        win = self._windows(x)
        z = np.einsum("kcpj,ocj->kop", win, self.params["conv_w"], optimize=True)
        a = np.tanh(z + self.params["conv_b"][None, :, None])
        state = a.mean(axis=(0, 2))
        return state, (win, a)

    def backward(self, cache, dstate):
        win, a = cache
        K, _, L = a.shape
        dz = (dstate[None, :, None] / (K * L)) * (1.0 - a**2)
        grads = {
            "conv_w": np.einsum("kop,kcpj->ocj", dz, win, optimize=True),
            "conv_b": dz.sum(axis=(0, 2)),
        }
        pad = self.width // 2
        dxp = np.zeros((K, self.in_channels, L + 2 * pad))
        w = self.params["conv_w"]
        for j in range(self.width):
            dxp[:, :, j:j + L] += np.einsum("kop,oc->kcp", dz, w[:, :, j])
        dxc = dxp[:, :, pad:pad + L]
        dx = dxc.transpose(0, 2, 1).reshape(K, self.n_inputs)
        return grads, dx


def make_encoder(kind, n_inputs, *, in_channels=1, width=5, channels=8, rng=None, scale=0.1):
    if kind == "identity":
        return IdentityEncoder(n_inputs)
    if kind == "conv":
        return ConvEncoder(n_inputs, in_channels, width, channels, rng, scale)
    raise PreconditionError(f"unknown encoder {kind!r}; expected 'identity' or 'conv'")


class _TwoLayer:
    """tanh MLP  x -> tanh(W1 x + b1) -> W2 h + b2."""

    def __init__(self, n_in, n_hidden, n_out, rng, scale):
        self.params = {
            "w1": _uniform(rng, scale, (n_hidden, n_in)),
            "b1": np.zeros(n_hidden),
            "w2": _uniform(rng, scale, (n_out, n_hidden)),
            "b2": np.zeros(n_out),
        }

    def forward(self, s):
        p = self.params
        h = np.tanh(p["w1"] @ s + p["b1"])
        return p["w2"] @ h + p["b2"], (s, h)

    def backward(self, cache, dout):
        s, h = cache
        p = self.params
        dh = p["w2"].T @ dout
        dpre = dh * (1.0 - h**2)
        grads = {
            "w1": np.outer(dpre, s),
            "b1": dpre,
            "w2": np.outer(dout, h),
            "b2": dout,
        }
        return grads, p["w1"].T @ dpre


class PolicyNetwork:
    """Encoder plus a two-layer head producing P(SNP | batch) over l actions."""

    def __init__(self, n_inputs, n_actions, hidden=64, encoder="identity", *,
                 in_channels=1, conv_width=5, conv_channels=8, rng=None, init_scale=0.1):
        rng = np.random.default_rng(rng)
        self.n_actions = n_actions
        self.encoder = make_encoder(
            encoder, n_inputs, in_channels=in_channels, width=conv_width,
            channels=conv_channels, rng=rng, scale=init_scale,
        )
        self.head = _TwoLayer(self.encoder.out_dim, hidden, n_actions, rng, init_scale)

    @property
    def params(self):
        return {**self.encoder.params, **self.head.params}

    def forward(self, x):
        """Return ``(probabilities, state, cache)`` for an encoded batch ``x``."""
        state, enc_cache = self.encoder.forward(x)
        logits, head_cache = self.head.forward(state)
        if not np.all(np.isfinite(logits)):
            raise NumericFailureError(
                "non-finite policy logits",
                snapshot={k: v.copy() for k, v in self.params.items()},
            )
        return softmax(logits), state, (enc_cache, head_cache)

    def backward(self, cache, dlogits):
        """Gradients of the loss w.r.t. parameters and input, given d loss / d logits."""
        enc_cache, head_cache = cache
        head_grads, dstate = self.head.backward(head_cache, dlogits)
        enc_grads, dx = self.encoder.backward(enc_cache, dstate)
        return {**enc_grads, **head_grads}, dx


class ValueNetwork:
    """Scalar baseline predictor on a (detached) copy of the policy state."""

    def __init__(self, n_state, hidden=64, *, rng=None, init_scale=0.1):
        rng = np.random.default_rng(rng)
        self.head = _TwoLayer(n_state, hidden, 1, rng, init_scale)

    @property
    def params(self):
        return self.head.params

    def forward(self, state):
        out, cache = self.head.forward(state)
        if not np.isfinite(out[0]):
            raise NumericFailureError(
                "non-finite baseline",
                snapshot={k: v.copy() for k, v in self.params.items()},
            )
        return float(out[0]), cache

    def backward(self, cache, dvalue):
        grads, _ = self.head.backward(cache, np.array([dvalue]))
        return grads
