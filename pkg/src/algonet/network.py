"""ReLU networks as plain layer lists, and the calculus used to assemble them.

A network is ``A_1 relu(A_2 relu(... ) + b_2) + b_1`` with ReLU between
layers and none after the last.  There are no skip connections: a value that
must survive a layer travels as an *identity pair* ``relu(v) - relu(-v)``.
Pairs are laid out interleaved, ``(+v_0, -v_0, +v_1, -v_1, ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .sparse import DimensionError, SparseAffineMap, SparseMatrix, block_diag


@dataclass(frozen=True)
class ParamCount:
    """Dense slot count and nonzero count of a network's weights and biases."""

    dense: int
    sparse: int


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    layers: tuple[SparseAffineMap, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        dt = layers[0].dtype
        for k in range(1, len(layers)):
            if layers[k].in_dim != layers[k - 1].out_dim:
                raise DimensionError(f"layer {k} input", layers[k - 1].out_dim, layers[k].in_dim)
            if layers[k].dtype != dt:
                raise TypeError("all layers must share one working precision")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].dtype

    @property
    def num_layers(self) -> int:
        """Number of affine maps."""
        return len(self.layers)

    @property
    def hidden_layers(self) -> int:
        return len(self.layers) - 1

    @property
    def depth(self) -> int:
        """Neuron layers counted input to output: hidden layers + 2."""
        return len(self.layers) + 1

    @property
    def hidden_widths(self) -> list[int]:
        return [layer.out_dim for layer in self.layers[:-1]]

    @property
    def width(self) -> int:
        return max(self.hidden_widths, default=0)

    def forward(self, x) -> np.ndarray:
        """Evaluate on one vector ``(input_dim,)`` or a batch ``(n, input_dim)``."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 0 and self.input_dim == 1:
            x = x.reshape(1)
        if x.ndim == 1:
            if x.shape[0] != self.input_dim:
                raise DimensionError("network input", self.input_dim, x.shape[0])
            h = x
        elif x.ndim == 2:
            if x.shape[1] != self.input_dim:
                raise DimensionError("network input", self.input_dim, x.shape[1])
            h = np.ascontiguousarray(x.T)
        else:
            raise DimensionError("network input rank", "1 or 2", x.ndim)
        last = len(self.layers) - 1
        for k, layer in enumerate(self.layers):
            h = layer.apply(h)
            if k != last:
                np.maximum(h, 0, out=h)
        return h if x.ndim == 1 else h.T

    __call__ = forward

    def astype(self, dtype) -> "ReluNetwork":
        if np.dtype(dtype) == self.dtype:
            return self
        return ReluNetwork(tuple(f.astype(dtype) for f in self.layers), self.metadata)

    def with_metadata(self, **meta) -> "ReluNetwork":
        return ReluNetwork(self.layers, {**self.metadata, **meta})

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReluNetwork):
            return NotImplemented
        return (
            len(self.layers) == len(other.layers)
            and all(a == b for a, b in zip(self.layers, other.layers))
            and dict(self.metadata) == dict(other.metadata)
        )

    __hash__ = None

    def __repr__(self) -> str:
        name = self.metadata.get("constructor", "net")
        return (
            f"ReluNetwork({name}: {self.input_dim}->{self.output_dim}, "
            f"hidden={self.hidden_layers}, width={self.width})"
        )


def forward(net: ReluNetwork, x) -> np.ndarray:
    return net.forward(x)


def affine_network(weights, bias=None, metadata: Mapping | None = None, dtype=np.float64) -> ReluNetwork:
    """A single-layer (ReLU-free) network; useful as glue for :func:`compose`."""
    if not isinstance(weights, SparseMatrix):
        weights = SparseMatrix.from_dense(weights, dtype=dtype)
    if bias is None:
        bias = np.zeros(weights.rows)
    return ReluNetwork((SparseAffineMap(weights, bias),), metadata or {"constructor": "affine"})


def selection(in_dim: int, picks: Sequence[int], dtype=np.float64) -> ReluNetwork:
    """Affine network returning ``x[picks]``."""
    entries = [(r, c, 1.0) for r, c in enumerate(picks)]
    return affine_network(SparseMatrix.from_entries(len(picks), in_dim, entries, dtype=dtype))


def compose(first: ReluNetwork, second: ReluNetwork) -> ReluNetwork:
    """Network computing ``second(first(x))``.

    The last map of ``first`` and the first map of ``second`` are fused by a
    sparse product so no extra ReLU is introduced.
    """
    if first.output_dim != second.input_dim:
        raise DimensionError("compose", first.output_dim, second.input_dim)
    dt = np.result_type(first.dtype, second.dtype)
    first, second = first.astype(dt), second.astype(dt)
    fused = second.layers[0].after(first.layers[-1])
    layers = first.layers[:-1] + (fused,) + second.layers[1:]
    return ReluNetwork(layers, {"constructor": "compose"})


def chain(nets: Sequence[ReluNetwork]) -> ReluNetwork:
    """Left-to-right composition of a sequence of networks."""
    nets = list(nets)
    if not nets:
        raise ValueError("chain needs at least one network")
    out = nets[0]
    for net in nets[1:]:
        out = compose(out, net)
    return out


def parallel(nets: Sequence[ReluNetwork]) -> ReluNetwork:
    """Stack equal-depth networks block-diagonally; inputs and outputs concatenate."""
    nets = list(nets)
    if not nets:
        raise ValueError("parallel needs at least one network")
    depth = nets[0].num_layers
    for net in nets[1:]:
        if net.num_layers != depth:
            raise DimensionError("parallel layer count", depth, net.num_layers)
    if len(nets) == 1:
        return nets[0]
    layers = []
    for k in range(depth):
        maps = [net.layers[k] for net in nets]
        w = block_diag([m.weights for m in maps])
        b = np.concatenate([m.bias for m in maps]).astype(w.dtype)
        layers.append(SparseAffineMap(w, b))
    return ReluNetwork(tuple(layers), {"constructor": "parallel"})


def _pair_lift(dim: int, dtype) -> SparseMatrix:
    # v -> (v, -v) per coordinate
    r = np.arange(2 * dim)
    c = r // 2
    v = np.where(r % 2 == 0, 1.0, -1.0)
    return SparseMatrix.from_coo(2 * dim, dim, r, c, v, dtype=dtype)


def _pair_read(dim: int, dtype) -> SparseMatrix:
    # (p, m) -> p - m per coordinate
    c = np.arange(2 * dim)
    r = c // 2
    v = np.where(c % 2 == 0, 1.0, -1.0)
    return SparseMatrix.from_coo(dim, 2 * dim, r, c, v, dtype=dtype)


def lift_identity(dim: int, depth: int, dtype=np.float64) -> ReluNetwork:
    """Identity on R^dim with ``depth`` hidden layers of ``2*dim`` neurons each."""
    if dim < 1 or depth < 1:
        raise ValueError("lift_identity needs dim >= 1 and depth >= 1")
    lift, read = _pair_lift(dim, dtype), _pair_read(dim, dtype)
    zeros2, zeros1 = np.zeros(2 * dim), np.zeros(dim)
    layers = [SparseAffineMap(lift, zeros2)]
    if depth > 1:
        through = SparseAffineMap(lift.matmul(read), zeros2)
        layers.extend([through] * (depth - 1))
    layers.append(SparseAffineMap(read, zeros1))
    return ReluNetwork(tuple(layers), {"constructor": "identity", "dim": dim, "depth": depth})


def pad_hidden(net: ReluNetwork, hidden_layers: int) -> ReluNetwork:
    """Append identity-pair layers until ``net`` has ``hidden_layers`` hidden layers."""
    extra = hidden_layers - net.hidden_layers
    if extra < 0:
        raise ValueError("network is already deeper than requested")
    if extra == 0:
        return net
    return compose(net, lift_identity(net.output_dim, extra, dtype=net.dtype)).with_metadata(**net.metadata)


def count_params(net: ReluNetwork) -> ParamCount:
    dense = sum(f.out_dim * f.in_dim + f.out_dim for f in net.layers)
    sparse = sum(f.weights.nnz() + f.nnz_bias() for f in net.layers)
    return ParamCount(dense=int(dense), sparse=int(sparse))


@dataclass(frozen=True)
class NetworkSummary:
    input_dim: int
    output_dim: int
    depth: int
    hidden_layers: int
    width: int
    hidden_widths: tuple[int, ...]
    params: ParamCount
    metadata: Mapping[str, Any]

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "depth": self.depth,
            "hidden_layers": self.hidden_layers,
            "width": self.width,
            "params_dense": self.params.dense,
            "params_sparse": self.params.sparse,
            "metadata": dict(self.metadata),
        }


def describe(net: ReluNetwork) -> NetworkSummary:
    return NetworkSummary(
        input_dim=net.input_dim,
        output_dim=net.output_dim,
        depth=net.depth,
        hidden_layers=net.hidden_layers,
        width=net.width,
        hidden_widths=tuple(net.hidden_widths),
        params=count_params(net),
        metadata=dict(net.metadata),
    )
