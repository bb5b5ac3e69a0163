"""Feed-forward ReLU networks: evaluation and (de)serialization.

Two on-disk formats are supported:

* the NNet text format used by the ACAS Xu benchmark networks, and
* a small JSON schema::

    {"format": "vcount-network", "version": 1, "input_dim": 2,
     "layers": [{"weights": [[...], ...], "biases": [...], "activation": "relu"}, ...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ParseError, ShapeError

JSON_FORMAT = "vcount-network"
JSON_VERSION = 1


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"


def _frozen(a: Any, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    biases: np.ndarray
    activation: Activation = Activation.RELU

    def __post_init__(self) -> None:
        w = _frozen(self.weights, 2)
        b = _frozen(self.biases, 1)
        if w.shape[0] != b.shape[0]:
            raise ShapeError(
                f"weights have {w.shape[0]} rows but biases have length {b.shape[0]}",
                rows=int(w.shape[0]),
                biases=int(b.shape[0]),
            )
        if w.shape[0] == 0:
            raise ShapeError("layer has no units")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ShapeError("layer parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class NNetMetadata:
    """Normalization constants found in an NNet file (not applied by default)."""

    input_mins: tuple[float, ...]
    input_maxes: tuple[float, ...]
    means: tuple[float, ...]
    ranges: tuple[float, ...]


@dataclass(frozen=True)
class Network:
    layers: tuple[Layer, ...]
    nnet_metadata: NNetMetadata | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise ShapeError(
                    f"layer {i} expects {layers[i].in_dim} inputs but layer {i - 1} "
                    f"produces {layers[i - 1].out_dim}",
                    layer=i,
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def forward(self, x: Any) -> np.ndarray:
        """Evaluate one point (shape ``(d,)``) or a batch (shape ``(n, d)``)."""
        v = np.asarray(x, dtype=np.float64)
        single = v.ndim == 1
        if single:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != self.input_dim:
            raise ShapeError(
                f"input has shape {np.shape(x)}, network expects {self.input_dim} features"
            )
        for layer in self.layers:
            v = _affine(layer, v)
            if layer.activation is Activation.RELU:
                v = np.maximum(v, 0.0)
        return v[0] if single else v

    def activation_pattern(self, x: Any) -> tuple[np.ndarray, ...]:
        """Per-ReLU-layer boolean masks of active units for a single point."""
        v = np.asarray(x, dtype=np.float64)[None, :]
        pattern = []
        for layer in self.layers:
            v = _affine(layer, v)
            if layer.activation is Activation.RELU:
                pattern.append(v[0] > 0)
                v = np.maximum(v, 0.0)
        return tuple(pattern)

    def normalized(self) -> Network:
        """Fold the NNet input/output normalization into the first and last layers.

        Input clipping to the NNet min/max is not representable and is not applied.
        """
        meta = self.nnet_metadata
        if meta is None:
            return self
        d = self.input_dim
        means = np.array(meta.means[:d])
        ranges = np.array(meta.ranges[:d])
        out_mean, out_range = meta.means[d], meta.ranges[d]
        layers = list(self.layers)
        first = layers[0]
        w = first.weights / ranges
        b = first.biases - w @ means
        layers[0] = Layer(w, b, first.activation)
        last = layers[-1]
        layers[-1] = Layer(last.weights * out_range, last.biases * out_range + out_mean, last.activation)
        return Network(tuple(layers))


def _affine(layer: Layer, v: np.ndarray) -> np.ndarray:
    # Fixed summation order: each output is bit-identical whatever the batch size,
    # which BLAS matmul does not guarantee. Counting hinges on exact boundary values.
    w = layer.weights
    acc = np.repeat(layer.biases[None, :], v.shape[0], axis=0)
    for j in range(w.shape[1]):
        acc += v[:, j : j + 1] * w[:, j]
    return acc


def forward(net: Network, x: Any) -> np.ndarray:
    return net.forward(x)


# -- JSON -----------------------------------------------------------------


def network_to_dict(net: Network) -> dict[str, Any]:
    return {
        "format": JSON_FORMAT,
        "version": JSON_VERSION,
        "input_dim": net.input_dim,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "biases": layer.biases.tolist(),
                "activation": layer.activation.value,
            }
            for layer in net.layers
        ],
    }


def network_from_dict(doc: Any) -> Network:
    if not isinstance(doc, dict):
        raise ParseError("network document must be a JSON object", path="$")
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ParseError("'layers' must be a nonempty list", path="$.layers")
    layers = []
    for i, raw in enumerate(raw_layers):
        path = f"$.layers[{i}]"
        if not isinstance(raw, dict):
            raise ParseError("layer must be an object", path=path)
        for key in ("weights", "biases"):
            if key not in raw:
                raise ParseError(f"layer {i} is missing '{key}'", path=f"{path}.{key}")
        act = raw.get("activation", "relu")
        try:
            activation = Activation(act)
        except ValueError:
            raise ParseError(
                f"layer {i}: unsupported activation {act!r} (expected 'relu' or 'identity')",
                path=f"{path}.activation",
            ) from None
        try:
            w = np.array(raw["weights"], dtype=np.float64)
            b = np.array(raw["biases"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"layer {i}: non-numeric parameters ({exc})", path=path) from None
        if w.ndim != 2:
            raise ParseError(f"layer {i}: weights must be a 2-D array", path=f"{path}.weights")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ParseError(
                f"layer {i}: biases length {b.size} does not match {w.shape[0]} weight rows",
                path=f"{path}.biases",
                layer=i,
            )
        try:
            layers.append(Layer(w, b, activation))
        except ShapeError as exc:
            raise ParseError(f"layer {i}: {exc.message}", path=path, layer=i) from None
    try:
        net = Network(tuple(layers))
    except ShapeError as exc:
        raise ParseError(exc.message, path="$.layers", **exc.context) from None
    if "input_dim" in doc and doc["input_dim"] != net.input_dim:
        raise ParseError(
            f"input_dim {doc['input_dim']} disagrees with first layer width {net.input_dim}",
            path="$.input_dim",
        )
    return net


def save_json(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1))


def load_json(path: str | Path) -> Network:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path="$") from None
    return network_from_dict(doc)


# -- NNet -----------------------------------------------------------------


def _nnet_rows(text: str) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("//"):
            continue
        tokens = [tok.strip() for tok in stripped.split(",")]
        rows.append((lineno, [tok for tok in tokens if tok]))
    return rows


def _numbers(lineno: int, tokens: Sequence[str], count: int | None, what: str) -> list[float]:
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric token {tok!r} in {what}", line=lineno, token=tok) from None
    if count is not None and len(values) < count:
        raise ParseError(
            f"line {lineno}: expected {count} values for {what}, found {len(values)}", line=lineno
        )
    return values if count is None else values[:count]


def parse_nnet(text: str) -> Network:
    rows = _nnet_rows(text)
    if not rows:
        raise ParseError("empty NNet file", line=0)
    it = iter(rows)

    def next_row(what: str) -> tuple[int, list[str]]:
        try:
            return next(it)
        except StopIteration:
            raise ParseError(f"unexpected end of file while reading {what}", line=rows[-1][0]) from None

    lineno, toks = next_row("header")
    header = _numbers(lineno, toks, 4, "header")
    n_layers, n_in, n_out = (int(v) for v in header[:3])
    if n_layers < 1 or n_in < 1 or n_out < 1:
        raise ParseError(f"line {lineno}: invalid header {header[:3]}", line=lineno)
    lineno, toks = next_row("layer sizes")
    sizes = [int(v) for v in _numbers(lineno, toks, n_layers + 1, "layer sizes")]
    if sizes[0] != n_in or sizes[-1] != n_out:
        raise ParseError(f"line {lineno}: layer sizes {sizes} disagree with header", line=lineno)
    next_row("symmetric flag")
    lineno, toks = next_row("input minimums")
    mins = _numbers(lineno, toks, n_in, "input minimums")
    lineno, toks = next_row("input maximums")
    maxes = _numbers(lineno, toks, n_in, "input maximums")
    lineno, toks = next_row("means")
    means = _numbers(lineno, toks, n_in + 1, "means")
    lineno, toks = next_row("ranges")
    ranges = _numbers(lineno, toks, n_in + 1, "ranges")

    layers = []
    for k in range(n_layers):
        n_rows, n_cols = sizes[k + 1], sizes[k]
        w = np.empty((n_rows, n_cols))
        for r in range(n_rows):
            lineno, toks = next_row(f"layer {k} weights")
            w[r] = _numbers(lineno, toks, n_cols, f"layer {k} weight row {r}")
        b = np.empty(n_rows)
        for r in range(n_rows):
            lineno, toks = next_row(f"layer {k} biases")
            b[r] = _numbers(lineno, toks, 1, f"layer {k} bias {r}")[0]
        act = Activation.IDENTITY if k == n_layers - 1 else Activation.RELU
        layers.append(Layer(w, b, act))
    meta = NNetMetadata(tuple(mins), tuple(maxes), tuple(means), tuple(ranges))
    return Network(tuple(layers), nnet_metadata=meta)


def load_nnet(path: str | Path) -> Network:
    return parse_nnet(Path(path).read_text())


def dump_nnet(net: Network) -> str:
    for i, layer in enumerate(net.layers):
        expected = Activation.IDENTITY if i == len(net.layers) - 1 else Activation.RELU
        if layer.activation is not expected:
            raise ShapeError("NNet requires ReLU hidden layers and an identity output layer", layer=i)
    sizes = [net.input_dim] + [layer.out_dim for layer in net.layers]
    meta = net.nnet_metadata
    d = net.input_dim
    if meta is None:
        meta = NNetMetadata((-math.inf,) * d, (math.inf,) * d, (0.0,) * (d + 1), (1.0,) * (d + 1))

    def row(values: Sequence[float]) -> str:
        return ",".join(repr(float(v)) for v in values) + ","

    lines = [
        "// written by vcount",
        f"{len(net.layers)},{d},{net.output_dim},{max(sizes)},",
        ",".join(str(s) for s in sizes) + ",",
        "0,",
        row(meta.input_mins),
        row(meta.input_maxes),
        row(meta.means),
        row(meta.ranges),
    ]
    for layer in net.layers:
        lines.extend(row(w_row) for w_row in layer.weights)
        lines.extend(row([b]) for b in layer.biases)
    return "\n".join(lines) + "\n"


def save_nnet(net: Network, path: str | Path) -> None:
    Path(path).write_text(dump_nnet(net))


def load_network(path: str | Path) -> Network:
    """Dispatch on file extension: ``.nnet`` or JSON."""
    if str(path).lower().endswith(".nnet"):
        return load_nnet(path)
    return load_json(path)


def example_network() -> Network:
    """The two-input running example: output -5 at input (1, 0)."""
    return Network(
        (
            Layer([[5.0, -1.0], [-1.0, 3.0]], [0.0, 0.0], Activation.RELU),
            Layer([[-1.0, 3.0]], [0.0], Activation.IDENTITY),
        )
    )


def constant_network(value: float, input_dim: int = 2) -> Network:
    return Network((Layer(np.zeros((1, input_dim)), [value], Activation.IDENTITY),))
