"""Frozen feedforward networks used as fixed feature extractors.

A network is a composition of layers ``x -> R_m(W_m x + b_m)``.  When only
the last layer is trained, the composition of all earlier layers turns each
raw input ``x_k`` into the features that define that sample's operator.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .activations import Activation, activate, parse_activation
from .linops import (DenseOperator, KernelConv2d, LinearOperator, ShapeError, as_shape,
                     operator_norm_sq)
from .tensorio import atomic_write_text, load_tensor, save_tensor

MANIFEST_FORMAT = "vilayer-network/1"


@dataclass(frozen=True)
class Layer:
    weight: LinearOperator
    bias: np.ndarray = None
    activation: Activation = Activation()

    def __post_init__(self):
        if self.bias is not None:
            bias = np.array(self.bias, dtype=np.float64)
            if bias.shape != self.weight.codomain_shape:
                raise ShapeError(f"bias shape {bias.shape} != {self.weight.codomain_shape}")
            bias.setflags(write=False)
            object.__setattr__(self, "bias", bias)

    def __call__(self, x):
        z = self.weight.apply(x)
        if self.bias is not None:
            z = z + self.bias
        return activate(self.activation, z)


class FrozenNetwork:
    """An immutable, shape-checked sequence of layers.

    An empty network is the identity map.
    """

    def __init__(self, layers=()):
        self.layers = tuple(layers)
        for m in range(1, len(self.layers)):
            prev, cur = self.layers[m - 1].weight, self.layers[m].weight
            if prev.codomain_shape != cur.domain_shape:
                raise ShapeError(
                    f"layer {m - 1} outputs {prev.codomain_shape} but layer {m} "
                    f"expects {cur.domain_shape}"
                )

    def __len__(self):
        return len(self.layers)

    @property
    def input_shape(self):
        return self.layers[0].weight.domain_shape if self.layers else None

    @property
    def output_shape(self):
        return self.layers[-1].weight.codomain_shape if self.layers else None

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            x = layer(x)
        return x

    __call__ = forward

    def extract_features(self, inputs):
        return [self.forward(x) for x in inputs]


def forward(net: FrozenNetwork, x):
    return net.forward(x)


def extract_features(net: FrozenNetwork, inputs):
    return net.extract_features(inputs)


def as_feature_tensor(features):
    """Features as ``[C, H, W]`` (a lone image gains a channel axis)."""
    features = np.asarray(features, dtype=np.float64)
    return features[None] if features.ndim == 2 else features


def pseudo_pretrained(channels=(1, 8, 8), kernel_size=3, spatial=(16, 16), slope=0.01,
                      seed=0) -> FrozenNetwork:
    """Seeded stand-in for a pretrained convolutional stack.

    ``channels`` lists the channel count at each depth, so
    ``len(channels) - 1`` layers are built.  Kernels are Gaussian and then
    rescaled so that each layer's operator norm at ``spatial`` resolution
    is 1; biases are zero and activations LeakyReLU with ``slope``.
    """
    rng = np.random.default_rng(seed)
    spatial = as_shape(spatial)
    layers = []
    for c_in, c_out in zip(channels[:-1], channels[1:]):
        kernel = rng.standard_normal((c_in, c_out, kernel_size, kernel_size))
        op = KernelConv2d(kernel, spatial)
        kernel = kernel / np.sqrt(operator_norm_sq(op).norm_sq)
        layers.append(Layer(KernelConv2d(kernel, spatial), None, Activation("leaky_relu", slope)))
    return FrozenNetwork(layers)


def save_network(net: FrozenNetwork, directory):
    directory = Path(directory)
    entries = []
    for m, layer in enumerate(net.layers):
        op = layer.weight
        entry = {"activation": layer.activation.spec(), "weight": f"layer_{m:02d}.vlt"}
        if isinstance(op, KernelConv2d):
            entry.update(kind="conv2d", spatial=list(op.codomain_shape[-2:]))
            save_tensor(directory / entry["weight"], op.kernel)
        elif isinstance(op, DenseOperator):
            entry.update(kind="dense", domain_shape=list(op.domain_shape),
                         codomain_shape=list(op.codomain_shape))
            save_tensor(directory / entry["weight"], op.matrix)
        else:
            raise TypeError(f"cannot serialize layer operator {op!r}")
        if layer.bias is None:
            entry["bias"] = "zero"
        else:
            entry["bias"] = f"bias_{m:02d}.vlt"
            save_tensor(directory / entry["bias"], layer.bias)
        entries.append(entry)
    manifest = {"format": MANIFEST_FORMAT, "layers": entries}
    atomic_write_text(directory / "network.json", json.dumps(manifest, indent=2) + "\n")


def load_network(path) -> FrozenNetwork:
    """Load a network manifest; shape mismatches between layers fail here."""
    path = Path(path)
    if path.is_dir():
        path = path / "network.json"
    manifest = json.loads(path.read_text())
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: unsupported manifest format {manifest.get('format')!r}")
    root = path.parent
    layers = []
    for entry in manifest["layers"]:
        payload = load_tensor(root / entry["weight"])
        if entry["kind"] == "conv2d":
            op = KernelConv2d(payload, entry["spatial"])
        elif entry["kind"] == "dense":
            op = DenseOperator(payload, entry["domain_shape"], entry["codomain_shape"])
        else:
            raise ValueError(f"{path}: unknown layer kind {entry['kind']!r}")
        bias = None if entry.get("bias", "zero") == "zero" else load_tensor(root / entry["bias"])
        layers.append(Layer(op, bias, parse_activation(entry.get("activation", "identity"))))
    return FrozenNetwork(layers)
