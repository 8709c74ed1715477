"""Dense multilayer perceptron with hand-written reverse-mode gradients.

The estimator rho_hat(x, t) is a plain tanh MLP. Everything here is
deliberately self-contained numpy: forward pass, mean-squared-error loss,
and backpropagated gradients, with a flat-vector engine reused by both
optimizers. No autograd framework is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fundamental import Environment
from .grids import DensityField, Grid

__all__ = [
    "ACTIVATIONS",
    "InputNormalization",
    "MlpParams",
    "init_params",
    "forward",
    "forward_field",
    "mse_loss",
    "gradient",
    "pack_params",
    "unpack_params",
]

# tags persisted in the model file
ACTIVATIONS = {"tanh": 0}
_TAG_TO_ACTIVATION = {v: k for k, v in ACTIVATIONS.items()}


@dataclass(frozen=True)
class InputNormalization:
    """Affine map sending raw (x, t) onto [-1, 1]^2 before the first layer.

    Raw road coordinates (hundreds of meters, tens of seconds) would
    saturate tanh units; the map is fixed at training time and stored with
    the parameters so a saved model evaluates identically anywhere.
    """

    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        vals = (self.x_lo, self.x_hi, self.t_lo, self.t_hi)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("normalization constants must be finite")
        if self.x_hi <= self.x_lo or self.t_hi <= self.t_lo:
            raise ValueError("normalization ranges must have positive width")

    @classmethod
    def identity(cls) -> "InputNormalization":
        return cls(-1.0, 1.0, -1.0, 1.0)

    @classmethod
    def from_grid(cls, grid: Grid) -> "InputNormalization":
        return cls(grid.x_min, grid.x_max, 0.0, grid.t_max)

    def apply(self, xt: np.ndarray) -> np.ndarray:
        """Normalize an (n, 2) array of raw (x, t) rows."""
        out = np.empty_like(xt)
        out[:, 0] = (2.0 * xt[:, 0] - (self.x_lo + self.x_hi)) / (self.x_hi - self.x_lo)
        out[:, 1] = (2.0 * xt[:, 1] - (self.t_lo + self.t_hi)) / (self.t_hi - self.t_lo)
        return out

    def as_tuple(self) -> tuple:
        return (self.x_lo, self.x_hi, self.t_lo, self.t_hi)


@dataclass(frozen=True)
class MlpParams:
    """Network parameters: per-layer weight matrices and bias vectors.

    weights[l] has shape (fan_out, fan_in); biases[l] has shape (fan_out,).
    Hidden layers use the configured activation, the output layer is
    linear. Arrays are frozen after construction.
    """

    layer_sizes: tuple
    weights: tuple
    biases: tuple
    activation: str = "tanh"
    normalization: InputNormalization = field(default_factory=InputNormalization.identity)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"invalid layer sizes {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("need one weight matrix and bias vector per layer")
        ws, bs = [], []
        for l, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            w = np.ascontiguousarray(self.weights[l], dtype=float)
            b = np.ascontiguousarray(self.biases[l], dtype=float)
            if w.shape != (n_out, n_in):
                raise ValueError(f"layer {l} weight shape {w.shape} != ({n_out}, {n_in})")
            if b.shape != (n_out,):
                raise ValueError(f"layer {l} bias shape {b.shape} != ({n_out},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} has non-finite entries")
            w.flags.writeable = False
            b.flags.writeable = False
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def with_normalization(self, norm: InputNormalization) -> "MlpParams":
        return MlpParams(self.layer_sizes, self.weights, self.biases,
                         self.activation, norm)


def init_params(layer_sizes, seed: int,
                normalization: InputNormalization | None = None) -> MlpParams:
    """Deterministic Glorot-uniform initialization; biases start at zero.

    Weights are uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out)),
    which keeps tanh pre-activations well-scaled at depth.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output layers")
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for n_in, n_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        ws.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
        bs.append(np.zeros(n_out))
    if normalization is None:
        normalization = InputNormalization.identity()
    return MlpParams(sizes, tuple(ws), tuple(bs), "tanh", normalization)


def _forward_batch(params: MlpParams, xt: np.ndarray) -> np.ndarray:
    a = params.normalization.apply(xt)
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w.T + b
        if l < last:
            np.tanh(a, out=a)
    return a[:, 0]


def forward(params: MlpParams, x, t) -> np.ndarray:
    """Estimated density rho_hat at (x, t); scalars or same-shape arrays."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
        raise ValueError("inputs must be finite")
    x, t = np.broadcast_arrays(x, t)
    shape = x.shape
    xt = np.column_stack([x.ravel(), t.ravel()]).astype(float)
    out = _forward_batch(params, xt)
    return float(out[0]) if shape == () else out.reshape(shape)


def forward_field(params: MlpParams, grid: Grid, env: Environment) -> DensityField:
    """Evaluate the model at every grid node. Predictions are not clamped,
    so the field may stray outside [0, rho_m]; that is diagnostic signal."""
    pts = grid.node_points()
    rho = _forward_batch(params, pts).reshape(grid.n_x, grid.n_t)
    return DensityField(grid=grid, env=env, rho=rho)


def _sample_matrix(samples) -> tuple:
    pts = np.asarray(samples.points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValueError("samples must be a nonempty list of (x, t, rho)")
    return pts[:, :2], pts[:, 2]


def mse_loss(params: MlpParams, samples) -> float:
    """Mean squared error of rho_hat against the sampled densities."""
    xt, y = _sample_matrix(samples)
    pred = _forward_batch(params, xt)
    return float(np.mean((pred - y) ** 2))


def gradient(params: MlpParams, samples) -> tuple:
    """Backpropagated gradient of mse_loss; shapes mirror the parameters.

    Returns (grad_weights, grad_biases), tuples parallel to params.weights
    and params.biases. Matches central finite differences to first order.
    """
    xt, y = _sample_matrix(samples)
    engine = MlpEngine(params.layer_sizes, params.normalization.apply(xt), y)
    theta = pack_params(params)
    _, g = engine.value_and_grad(theta)
    gw, gb = [], []
    off = 0
    for w, b in zip(params.weights, params.biases):
        gw.append(g[off:off + w.size].reshape(w.shape).copy())
        off += w.size
        gb.append(g[off:off + b.size].copy())
        off += b.size
    return tuple(gw), tuple(gb)


def pack_params(params: MlpParams) -> np.ndarray:
    """Flatten all weights and biases into one vector (layer-major, W then b)."""
    return np.concatenate(
        [a.ravel() for w, b in zip(params.weights, params.biases) for a in (w, b)])


def unpack_params(theta: np.ndarray, template: MlpParams) -> MlpParams:
    """Rebuild MlpParams from a flat vector using template's architecture."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (template.n_params,):
        raise ValueError(f"expected {template.n_params} entries, got {theta.shape}")
    ws, bs = [], []
    off = 0
    for w, b in zip(template.weights, template.biases):
        ws.append(theta[off:off + w.size].reshape(w.shape).copy())
        off += w.size
        bs.append(theta[off:off + b.size].copy())
        off += b.size
    return MlpParams(template.layer_sizes, tuple(ws), tuple(bs),
                     template.activation, template.normalization)


class MlpEngine:
    """Flat-parameter loss/gradient evaluator over a fixed sample batch.

    Holds normalized inputs and preallocated activation and delta buffers
    so repeated evaluations (optimizer inner loops) do no allocation. The
    returned gradient is a fresh copy each call.
    """

    def __init__(self, layer_sizes, xt_norm: np.ndarray, y: np.ndarray):
        self.sizes = tuple(int(s) for s in layer_sizes)
        self.x0 = np.ascontiguousarray(xt_norm, dtype=float)
        self.y = np.ascontiguousarray(y, dtype=float)
        n = self.x0.shape[0]
        if self.x0.shape != (n, self.sizes[0]) or self.y.shape != (n,):
            raise ValueError("sample arrays do not match the architecture")
        self.n = n
        self.n_layers = len(self.sizes) - 1
        self.n_params = sum((a + 1) * b for a, b in zip(self.sizes, self.sizes[1:]))
        # activations per layer (post-activation), plus two delta buffers
        self.acts = [np.empty((n, s)) for s in self.sizes[1:]]
        self.delta = [np.empty((n, s)) for s in self.sizes[1:]]
        self.tmp = [np.empty((n, s)) for s in self.sizes[1:]]

    def _views(self, theta: np.ndarray) -> tuple:
        ws, bs = [], []
        off = 0
        for n_in, n_out in zip(self.sizes, self.sizes[1:]):
            ws.append(theta[off:off + n_out * n_in].reshape(n_out, n_in))
            off += n_out * n_in
            bs.append(theta[off:off + n_out])
            off += n_out
        return ws, bs

    def _forward(self, theta: np.ndarray) -> float:
        ws, bs = self._views(theta)
        a = self.x0
        for l in range(self.n_layers):
            z = self.acts[l]
            np.matmul(a, ws[l].T, out=z)
            z += bs[l]
            if l < self.n_layers - 1:
                np.tanh(z, out=z)
            a = z
        resid = self.acts[-1][:, 0] - self.y
        return float(np.dot(resid, resid) / self.n)

    def value(self, theta: np.ndarray) -> float:
        """Loss only (used by line-search probes)."""
        return self._forward(theta)

    def value_and_grad(self, theta: np.ndarray) -> tuple:
        loss = self._forward(theta)
        ws, _ = self._views(theta)
        grad = np.empty(self.n_params)
        gws, gbs = self._views(grad)

        d = self.delta[-1]
        d[:, 0] = self.acts[-1][:, 0] - self.y
        d *= 2.0 / self.n
        for l in range(self.n_layers - 1, -1, -1):
            a_prev = self.acts[l - 1] if l > 0 else self.x0
            np.matmul(d.T, a_prev, out=gws[l])
            np.sum(d, axis=0, out=gbs[l])
            if l > 0:
                t = self.tmp[l - 1]
                np.matmul(d, ws[l], out=t)
                a = self.acts[l - 1]
                dprev = self.delta[l - 1]
                # tanh'(z) = 1 - a^2 with a = tanh(z)
                np.multiply(a, a, out=dprev)
                np.subtract(1.0, dprev, out=dprev)
                dprev *= t
                d = dprev
        return loss, grad
