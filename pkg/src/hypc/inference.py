"""Dense forward pass with decode-while-compute pipelining, plus a toy trainer.

The pipeline runs exactly two workers: a decoder thread feeding a capacity-1
hand-off queue and the computing thread consuming it. Layer i is always fully
decoded before it is used; layer i+1 may decode while layer i computes. The
outputs are bitwise identical to decoding everything first and then running
the forward pass, regardless of scheduling.
"""

from __future__ import annotations

import enum
import queue
import re
import threading
import time
from dataclasses import dataclass

import numpy as np

from .codec import EncodedLayer, decode_layer
from .container import CompressedModel, Tensor, TensorBundle
from .errors import DataError

_WEIGHT_RE = re.compile(r"^layer(\d+)\.(weight|bias)$")


class Activation(enum.Enum):
    RELU = "relu"
    IDENTITY = "identity"


@dataclass
class MlpLayer:
    weight: np.ndarray  # (out, in) float32
    bias: np.ndarray  # (out,) float32
    activation: Activation

    def __post_init__(self):
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float32)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float32)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weight must be (out, in) and bias (out,)")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias size {self.bias.shape[0]} != output dim {self.weight.shape[0]}"
            )


@dataclass
class MlpNetwork:
    layers: list[MlpLayer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError(
                    f"layer input dim {nxt.weight.shape[1]} does not chain from "
                    f"previous output dim {prev.weight.shape[0]}"
                )
        if self.layers[-1].activation is not Activation.IDENTITY:
            raise ValueError("final layer must use the identity activation")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]


def _apply_layer(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                 activation: Activation) -> np.ndarray:
    y = x @ weight.T + bias
    if activation is Activation.RELU:
        y = np.maximum(y, np.float32(0.0))
    return y


def mlp_forward(net: MlpNetwork, batch) -> np.ndarray:
    """Row-major float32 forward pass; deterministic evaluation order."""
    x = np.ascontiguousarray(batch, dtype=np.float32)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"batch must be (n, {net.input_dim}), got {x.shape}")
    for layer in net.layers:
        x = _apply_layer(x, layer.weight, layer.bias, layer.activation)
    return x


def network_to_bundle(net: MlpNetwork) -> TensorBundle:
    """Flatten a network into layer{i}.weight / layer{i}.bias tensors."""
    tensors = []
    for i, layer in enumerate(net.layers):
        tensors.append(Tensor(f"layer{i}.weight", layer.weight.shape, layer.weight.reshape(-1)))
        tensors.append(Tensor(f"layer{i}.bias", layer.bias.shape, layer.bias))
    return TensorBundle(tensors)


def _collect_mlp_parts(names: list[str]) -> int:
    """Validate the layer{i}.{weight,bias} naming and return the layer count."""
    seen: dict[tuple[int, str], None] = {}
    for name in names:
        m = _WEIGHT_RE.match(name)
        if not m:
            raise DataError(f"tensor {name!r} does not follow layer<i>.weight/bias naming")
        seen[(int(m.group(1)), m.group(2))] = None
    count = 1 + max(i for i, _ in seen)
    expected = {(i, kind) for i in range(count) for kind in ("weight", "bias")}
    missing = expected - seen.keys()
    if missing:
        raise DataError(f"missing tensors for {sorted(missing)}")
    return count


def _assemble_network(fetch, names: list[str]) -> MlpNetwork:
    count = _collect_mlp_parts(names)
    layers = []
    for i in range(count):
        w_shape, w_data = fetch(f"layer{i}.weight")
        b_shape, b_data = fetch(f"layer{i}.bias")
        if len(w_shape) != 2 or len(b_shape) != 1:
            raise DataError(f"layer{i}: weight must be rank 2 and bias rank 1")
        act = Activation.IDENTITY if i == count - 1 else Activation.RELU
        layers.append(MlpLayer(w_data.reshape(w_shape), b_data.reshape(b_shape), act))
    return MlpNetwork(layers)


def bundle_to_network(bundle: TensorBundle) -> MlpNetwork:
    def fetch(name):
        t = bundle.get(name)
        return t.shape, t.data
    return _assemble_network(fetch, [t.name for t in bundle.tensors])


def decoded_tensor(enc: EncodedLayer) -> np.ndarray:
    """Decode one layer to float32 in its logical shape."""
    return decode_layer(enc).astype(np.float32).reshape(enc.shape)


def model_to_network(model: CompressedModel) -> MlpNetwork:
    """Decode everything up front and assemble the network (the sequential arm)."""
    by_name = {layer.name: layer for layer in model.layers}

    def fetch(name):
        enc = by_name[name]
        return enc.shape, decoded_tensor(enc)
    return _assemble_network(fetch, list(by_name))


@dataclass
class PipelineTrace:
    """perf_counter spans for each stage, for overlap inspection."""

    decode_spans: list[tuple[float, float]]
    compute_spans: list[tuple[float, float]]
    wall: float


def pipelined_forward(model: CompressedModel, batch, with_trace: bool = False):
    """Forward pass that decodes layer i+1 while layer i computes.

    Each layer decodes exactly once per call. Returns the outputs, or
    (outputs, PipelineTrace) when with_trace is set.
    """
    by_name = {layer.name: layer for layer in model.layers}
    count = _collect_mlp_parts(list(by_name))
    x = np.ascontiguousarray(batch, dtype=np.float32)
    if x.ndim != 2:
        raise ValueError(f"batch must be 2-D, got shape {x.shape}")

    handoff: queue.Queue = queue.Queue(maxsize=1)
    decode_spans: list[tuple[float, float]] = [None] * count  # type: ignore[list-item]
    compute_spans: list[tuple[float, float]] = [None] * count  # type: ignore[list-item]

    def decoder():
        try:
            for i in range(count):
                t0 = time.perf_counter()
                w_enc = by_name[f"layer{i}.weight"]
                b_enc = by_name[f"layer{i}.bias"]
                if len(w_enc.shape) != 2 or len(b_enc.shape) != 1:
                    raise DataError(f"layer{i}: weight must be rank 2 and bias rank 1")
                weight = decoded_tensor(w_enc)
                bias = decoded_tensor(b_enc)
                decode_spans[i] = (t0, time.perf_counter())
                handoff.put((weight, bias))
        except BaseException as exc:  # hand the failure to the consumer
            handoff.put(exc)

    start = time.perf_counter()
    worker = threading.Thread(target=decoder, name="hypc-decoder", daemon=True)
    worker.start()
    try:
        for i in range(count):
            item = handoff.get()
            if isinstance(item, BaseException):
                raise item
            weight, bias = item
            act = Activation.IDENTITY if i == count - 1 else Activation.RELU
            t0 = time.perf_counter()
            x = _apply_layer(x, weight, bias, act)
            compute_spans[i] = (t0, time.perf_counter())
    finally:
        worker.join()
    wall = time.perf_counter() - start
    if with_trace:
        return x, PipelineTrace(decode_spans, compute_spans, wall)
    return x


# --- toy two-blob classification problem ---------------------------------

_BLOB_OFFSET = 1.25  # per-coordinate mean of the two classes, +/-
_TOY_DIMS = (4, 32, 16, 2)
_TOY_TRAIN_PER_CLASS = 1000
_TOY_TEST_PER_CLASS = 500
_TOY_EPOCHS = 500
_TOY_STEP = 0.1


@dataclass
class ToyDataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray


def make_toy_dataset(seed: int) -> ToyDataset:
    """Two 4-D Gaussian blobs, balanced, deterministically shuffled."""
    rng = np.random.default_rng([int(seed), 0])

    def split(per_class: int):
        lo = rng.normal(-_BLOB_OFFSET, 1.0, size=(per_class, 4))
        hi = rng.normal(_BLOB_OFFSET, 1.0, size=(per_class, 4))
        x = np.vstack([lo, hi]).astype(np.float32)
        y = np.concatenate([np.zeros(per_class, np.int64), np.ones(per_class, np.int64)])
        perm = rng.permutation(2 * per_class)
        return x[perm], y[perm]

    train_x, train_y = split(_TOY_TRAIN_PER_CLASS)
    test_x, test_y = split(_TOY_TEST_PER_CLASS)
    return ToyDataset(train_x, train_y, test_x, test_y)


def train_toy(seed: int) -> MlpNetwork:
    """Full-batch gradient descent on the toy blobs; deterministic per seed."""
    ds = make_toy_dataset(seed)
    rng = np.random.default_rng([int(seed), 1])
    dims = _TOY_DIMS
    weights = [
        rng.normal(0.0, np.sqrt(2.0 / dims[i]), size=(dims[i + 1], dims[i]))
        for i in range(len(dims) - 1)
    ]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]

    x = ds.train_x.astype(np.float64)
    onehot = np.zeros((len(ds.train_y), dims[-1]))
    onehot[np.arange(len(ds.train_y)), ds.train_y] = 1.0
    n = len(x)

    for _ in range(_TOY_EPOCHS):
        # forward
        acts = [x]
        for i, (w, b) in enumerate(zip(weights, biases)):
            z = acts[-1] @ w.T + b
            acts.append(np.maximum(z, 0.0) if i < len(weights) - 1 else z)
        logits = acts[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        expz = np.exp(shifted)
        probs = expz / expz.sum(axis=1, keepdims=True)
        # backward
        delta = (probs - onehot) / n
        for i in range(len(weights) - 1, -1, -1):
            grad_w = delta.T @ acts[i]
            grad_b = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ weights[i]) * (acts[i] > 0.0)
            weights[i] = weights[i] - _TOY_STEP * grad_w
            biases[i] = biases[i] - _TOY_STEP * grad_b

    layers = [
        MlpLayer(
            weights[i].astype(np.float32),
            biases[i].astype(np.float32),
            Activation.IDENTITY if i == len(weights) - 1 else Activation.RELU,
        )
        for i in range(len(weights))
    ]
    return MlpNetwork(layers)


def eval_accuracy(net_or_model, inputs, labels) -> float:
    """Top-1 accuracy of a network or compressed model on labeled inputs."""
    if isinstance(net_or_model, CompressedModel):
        outputs = pipelined_forward(net_or_model, inputs)
    else:
        outputs = mlp_forward(net_or_model, inputs)
    pred = np.argmax(outputs, axis=1)
    return float(np.mean(pred == np.asarray(labels)))


def save_dataset_csv(path, inputs: np.ndarray, labels: np.ndarray) -> None:
    """Write rows as x1..xd,label with enough digits to round-trip float32."""
    from .container import _write_blob

    inputs = np.asarray(inputs, dtype=np.float32)
    labels = np.asarray(labels)
    header = ",".join(f"x{i + 1}" for i in range(inputs.shape[1])) + ",label"
    lines = [header]
    for row, y in zip(inputs, labels):
        lines.append(",".join(format(float(v), ".9g") for v in row) + f",{int(y)}")
    _write_blob(("\n".join(lines) + "\n").encode("utf-8"), path)


def load_dataset_csv(path) -> tuple[np.ndarray, np.ndarray]:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    if table.shape[1] < 2:
        raise DataError("dataset CSV needs at least one feature column plus label")
    return table[:, :-1].astype(np.float32), table[:, -1].astype(np.int64)
