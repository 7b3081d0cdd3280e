"""Minimal neural-network layers with hand-written backpropagation.

All layers are stride-1 / factor-2 building blocks sufficient for the
font CAE: convolution (im2col), batch norm, ReLU, sigmoid, 2x2 max pool,
nearest-neighbor x2 upsampling, flatten, linear, dropout. Forward caches
whatever backward needs; backward accumulates parameter gradients and
returns the gradient with respect to the input.
"""

from __future__ import annotations

import numpy as np


class Layer:
    """Base layer: parameter-free identity."""

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}


class Conv2D(Layer):
    """Stride-1 2-D convolution with symmetric zero padding.

    Computed as k*k shifted (cout, cin) matrix products rather than one
    im2col product: the column buffer for a 5x5 kernel over 64 input maps
    is hundreds of megabytes, and its memory traffic dominates the cost.
    When the contracted side is tiny (few input or output channels), the
    column buffer is small and a single im2col product wins instead.

    ``skip_input_grad`` suppresses the input-gradient computation for a
    network's first layer, where nothing consumes it.
    """

    # Largest c*k*k for which the im2col column buffer stays small.
    _COLS_LIMIT = 64

    def __init__(self, cin: int, cout: int, k: int, pad: int, rng: np.random.Generator,
                 dtype=np.float32, skip_input_grad: bool = False):
        scale = 1.0 / np.sqrt(cin * k * k)
        self.w = rng.uniform(-scale, scale, size=(cout, cin * k * k)).astype(dtype)
        self.b = np.zeros(cout, dtype=dtype)
        self.cin, self.k, self.pad = cin, k, pad
        self.skip_input_grad = skip_input_grad
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._xp = None
        self._cols = None
        self._xshape = None

    @staticmethod
    def _im2col(xp, h, w, k):
        """(n, c, hp, wp) padded input -> (n*h*w, c*k*k) columns."""
        win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
        n = xp.shape[0]
        return win[:, :, :h, :w].transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, -1)

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        k, p = self.k, self.pad
        cout = self.w.shape[0]
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        self._xshape = x.shape
        if c * k * k <= self._COLS_LIMIT:
            cols = self._im2col(xp, h, w, k)
            self._cols, self._xp = cols, None
            out = (cols @ self.w.T).reshape(n, h, w, cout).transpose(0, 3, 1, 2)
            return out + self.b[None, :, None, None]
        wk = self.w.reshape(cout, c, k, k)
        out = np.zeros((cout, n, h, w), dtype=x.dtype)
        for dy in range(k):
            for dx in range(k):
                shifted = xp[:, :, dy : dy + h, dx : dx + w]
                out += np.tensordot(wk[:, :, dy, dx], shifted, axes=([1], [1]))
        self._xp, self._cols = xp, None
        return out.transpose(1, 0, 2, 3) + self.b[None, :, None, None]

    def _input_grad(self, grad):
        """dL/dx as a full correlation of the output gradient with the
        kernel; uses im2col over the (often few) output channels when that
        buffer is small."""
        n, c, h, w = self._xshape
        k, p = self.k, self.pad
        cout = self.w.shape[0]
        wk = self.w.reshape(cout, c, k, k)
        if cout * k * k <= self._COLS_LIMIT:
            # Pad the gradient to k-1 and convolve with the flipped kernel.
            gp = np.pad(grad, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
            hp, wp = h + 2 * p, w + 2 * p
            gcols = self._im2col(gp, hp, wp, k)
            wflip = wk[:, :, ::-1, ::-1].transpose(0, 2, 3, 1).reshape(-1, c)
            dxp = (gcols @ wflip).reshape(n, hp, wp, c).transpose(0, 3, 1, 2)
        else:
            dxp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=grad.dtype)
            for dy in range(k):
                for dx in range(k):
                    dxp[:, :, dy : dy + h, dx : dx + w] += np.tensordot(
                        wk[:, :, dy, dx], grad, axes=([0], [1])
                    ).transpose(1, 0, 2, 3)
        return dxp[:, :, p : p + h, p : p + w] if p else dxp

    def backward(self, grad):
        n, c, h, w = self._xshape
        k = self.k
        cout = self.w.shape[0]
        if self._cols is not None:
            g2 = grad.transpose(0, 2, 3, 1).reshape(n * h * w, cout)
            self.dw += g2.T @ self._cols
        else:
            xp = self._xp
            dwk = self.dw.reshape(cout, c, k, k)
            for dy in range(k):
                for dx in range(k):
                    shifted = xp[:, :, dy : dy + h, dx : dx + w]
                    dwk[:, :, dy, dx] += np.tensordot(
                        grad, shifted, axes=([0, 2, 3], [0, 2, 3])
                    )
        self.db += grad.sum(axis=(0, 2, 3))
        dx = None if self.skip_input_grad else self._input_grad(grad)
        self._xp = self._cols = None
        return dx

    def params(self):
        return {"weight": self.w, "bias": self.b}

    def grads(self):
        return {"weight": self.dw, "bias": self.db}


class BatchNorm2D(Layer):
    """Per-channel batch normalization over (N, H, W)."""

    def __init__(self, c: int, momentum: float = 0.1, eps: float = 1e-5,
                 dtype=np.float32):
        self.gamma = np.ones(c, dtype=dtype)
        self.beta = np.zeros(c, dtype=dtype)
        self.running_mean = np.zeros(c, dtype=dtype)
        self.running_var = np.ones(c, dtype=dtype)
        self.momentum, self.eps = momentum, eps
        self.dgamma = np.zeros_like(self.gamma)
        self.dbeta = np.zeros_like(self.beta)

    def forward(self, x, train=False):
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
        else:
            mean, var = self.running_mean, self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
        self._cache = (xhat, inv, train)
        return self.gamma[None, :, None, None] * xhat + self.beta[None, :, None, None]

    def backward(self, grad):
        xhat, inv, train = self._cache
        self.dgamma += (grad * xhat).sum(axis=(0, 2, 3))
        self.dbeta += grad.sum(axis=(0, 2, 3))
        g = grad * self.gamma[None, :, None, None]
        if not train:
            return g * inv[None, :, None, None]
        m = grad.shape[0] * grad.shape[2] * grad.shape[3]
        sum_g = g.sum(axis=(0, 2, 3))[None, :, None, None]
        sum_gx = (g * xhat).sum(axis=(0, 2, 3))[None, :, None, None]
        return (inv[None, :, None, None] / m) * (m * g - sum_g - xhat * sum_gx)

    def params(self):
        return {
            "gamma": self.gamma,
            "beta": self.beta,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }

    def grads(self):
        return {"gamma": self.dgamma, "beta": self.dbeta}


class ReLU(Layer):
    def forward(self, x, train=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad):
        return grad * self._mask


class Sigmoid(Layer):
    def forward(self, x, train=False):
        self._out = 1.0 / (1.0 + np.exp(-x))
        return self._out

    def backward(self, grad):
        return grad * self._out * (1.0 - self._out)


class MaxPool2(Layer):
    """2x2 max pooling, stride 2; even input dims required."""

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        xr = (
            x.reshape(n, c, h // 2, 2, w // 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h // 2, w // 2, 4)
        )
        self._idx = xr.argmax(axis=-1)
        self._xshape = x.shape
        return np.take_along_axis(xr, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        n, c, h, w = self._xshape
        gr = np.zeros((n, c, h // 2, w // 2, 4), dtype=grad.dtype)
        np.put_along_axis(gr, self._idx[..., None], grad[..., None], axis=-1)
        return (
            gr.reshape(n, c, h // 2, w // 2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h, w)
        )


class UpsampleNearest2(Layer):
    """Nearest-neighbor x2 upsampling."""

    def forward(self, x, train=False):
        return x.repeat(2, axis=2).repeat(2, axis=3)

    def backward(self, grad):
        n, c, h, w = grad.shape
        return grad.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


class Flatten(Layer):
    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Linear(Layer):
    def __init__(self, nin: int, nout: int, rng: np.random.Generator | None,
                 dtype=np.float32, zero_init: bool = False):
        if zero_init or rng is None:
            self.w = np.zeros((nout, nin), dtype=dtype)
        else:
            scale = 1.0 / np.sqrt(nin)
            self.w = rng.uniform(-scale, scale, size=(nout, nin)).astype(dtype)
        self.b = np.zeros(nout, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def forward(self, x, train=False):
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, grad):
        self.dw += grad.T @ self._x
        self.db += grad.sum(axis=0)
        return grad @ self.w

    def params(self):
        return {"weight": self.w, "bias": self.b}

    def grads(self):
        return {"weight": self.dw, "bias": self.db}


class Dropout(Layer):
    """Inverted dropout; identity in eval mode. Draws its mask from the
    generator handed in, so training runs are reproducible."""

    def __init__(self, p: float, rng: np.random.Generator):
        self.p = p
        self.rng = rng

    def forward(self, x, train=False):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        self._mask = (self.rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask


def run_forward(layers: list[Layer], x: np.ndarray, train: bool = False) -> np.ndarray:
    for layer in layers:
        x = layer.forward(x, train)
    return x


def run_backward(layers: list[Layer], grad: np.ndarray) -> np.ndarray:
    for layer in reversed(layers):
        grad = layer.backward(grad)
    return grad


def zero_grads(layers: list[Layer]) -> None:
    for layer in layers:
        for g in layer.grads().values():
            g[...] = 0.0


def mse_loss(recon: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements, with gradient."""
    diff = recon - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Softmax cross entropy averaged over the batch, with gradient."""
    n = logits.shape[0]
    p = softmax(logits)
    loss = float(-np.mean(np.log(np.maximum(p[np.arange(n), labels], 1e-300))))
    grad = p.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


class SGDMomentum:
    """Plain SGD with classical momentum."""

    def __init__(self, layers: list[Layer], lr: float, momentum: float = 0.9):
        self.layers = layers
        self.lr = lr
        self.momentum = momentum
        self.vel = [
            {name: np.zeros_like(p) for name, p in layer.params().items()
             if name in layer.grads()}
            for layer in layers
        ]

    def step(self) -> None:
        for layer, vel in zip(self.layers, self.vel):
            grads = layer.grads()
            for name, p in layer.params().items():
                if name not in grads:
                    continue
                v = vel[name]
                v *= self.momentum
                v -= self.lr * grads[name]
                p += v
