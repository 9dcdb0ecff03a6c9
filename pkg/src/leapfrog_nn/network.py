"""Dense sigmoid network, seeded construction, forward pass and file format.

Layers are numbered ``1..L`` as in the usual textbook treatment; layer 1 is
the input and carries no parameters. ``weights[l - 2]`` holds ``w^l`` with
shape ``(sizes[l-1], sizes[l-2])`` and ``biases[l - 2]`` holds ``b^l``.

The forward rule is ``z^l = w^l a^{l-1} + b^l``, ``a^l = sigmoid(z^l)``.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .linalg import ShapeError, as_vector, matvec, sigmoid

FORMAT_VERSION = 1
MAX_SEED = 2**64 - 1


class NetworkFormatError(ValueError):
    """A network file is malformed or inconsistent."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Network:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = self.layer_sizes
        if len(sizes) < 2:
            raise ValueError(f"a network needs at least 2 layers, got {len(sizes)}")
        if any(int(n) < 1 for n in sizes):
            raise ValueError(f"layer sizes must be positive, got {list(sizes)}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("need one weight matrix and one bias vector per non-input layer")
        for l in range(2, len(sizes) + 1):
            w, b = self.weights[l - 2], self.biases[l - 2]
            expected = (sizes[l - 1], sizes[l - 2])
            if w.shape != expected:
                raise ShapeError(f"layer {l}: weight shape {w.shape}, expected {expected}")
            if b.shape != (sizes[l - 1],):
                raise ShapeError(f"layer {l}: bias shape {b.shape}, expected ({sizes[l - 1]},)")

    @classmethod
    def from_arrays(cls, weights, biases) -> "Network":
        """Build a network from nested sequences, copying and freezing them."""
        ws = tuple(_frozen(np.ascontiguousarray(np.array(w, dtype=np.float64))) for w in weights)
        bs = tuple(_frozen(np.array(b, dtype=np.float64)) for b in biases)
        if not ws:
            raise ValueError("a network needs at least 2 layers")
        for l, (w, b) in enumerate(zip(ws, bs), start=2):
            if w.ndim != 2 or b.ndim != 1:
                raise ShapeError(f"layer {l}: weights must be 2-D and biases 1-D")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l}: parameters contain non-finite values")
        sizes = (ws[0].shape[1],) + tuple(w.shape[0] for w in ws)
        return cls(sizes, ws, bs)

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes)

    def size(self, l: int) -> int:
        return self.layer_sizes[l - 1]

    def w(self, l: int) -> np.ndarray:
        return self.weights[l - 2]

    def b(self, l: int) -> np.ndarray:
        return self.biases[l - 2]

    def num_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def identical_to(self, other: "Network") -> bool:
        """Bitwise equality of sizes and every parameter."""
        if self.layer_sizes != other.layer_sizes:
            return False
        return all(
            a.tobytes() == b.tobytes()
            for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Cached ``zs[l-2] = z^l`` (l >= 2) and ``activations[l-1] = a^l`` (l >= 1)."""

    zs: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]

    @property
    def num_layers(self) -> int:
        return len(self.activations)

    def z(self, l: int) -> np.ndarray:
        return self.zs[l - 2]

    def a(self, l: int) -> np.ndarray:
        return self.activations[l - 1]


def _check_sizes(layer_sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2:
        raise ValueError(f"a network needs at least 2 layers, got {list(sizes)}")
    if any(n < 1 for n in sizes):
        raise ValueError(f"layer sizes must be positive, got {list(sizes)}")
    return sizes


def new_random(layer_sizes: Sequence[int], seed: int) -> Network:
    """Network with parameters drawn i.i.d. from U[-0.5, 0.5).

    Draws come from numpy's PCG64 bit generator seeded with ``seed``
    (``numpy.random.default_rng(seed)``), layer by layer for ``l = 2..L``:
    first ``w^l`` in row-major order, then ``b^l``. Each value is
    ``random() - 0.5``, which is exact for ``random()`` in [0, 1).
    """
    sizes = _check_sizes(layer_sizes)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for l in range(2, len(sizes) + 1):
        rows, cols = sizes[l - 1], sizes[l - 2]
        weights.append(_frozen(rng.random((rows, cols)) - 0.5))
        biases.append(_frozen(rng.random(rows) - 0.5))
    return Network(sizes, tuple(weights), tuple(biases))


def random_sample(net: Network, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Input ``x`` and target ``y`` drawn from U[0, 1).

    Uses ``default_rng((seed, 1))``, a stream independent of the one that
    ``new_random`` draws parameters from; ``x`` is drawn before ``y``.
    """
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng((seed, 1))
    x = rng.random(net.layer_sizes[0])
    y = rng.random(net.layer_sizes[-1])
    return x, y


def layer_forward(w: np.ndarray, b: np.ndarray, a_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One layer of the forward pass; returns ``(z, a)``."""
    z = matvec(w, a_prev)
    z += b
    return z, sigmoid(z)


def forward(net: Network, x) -> ForwardTrace:
    x = as_vector(x, "input")
    if x.shape[0] != net.layer_sizes[0]:
        raise ShapeError(f"input has length {x.shape[0]}, network expects {net.layer_sizes[0]}")
    zs, acts = [], [_frozen(x)]
    for w, b in zip(net.weights, net.biases):
        z, a = layer_forward(w, b, acts[-1])
        zs.append(_frozen(z))
        acts.append(_frozen(a))
    return ForwardTrace(tuple(zs), tuple(acts))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _payload(net: Network) -> dict:
    return {
        "version": FORMAT_VERSION,
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dumps(net: Network) -> str:
    """Serialize to the versioned JSON network format.

    Floats use Python's shortest round-trip repr, so a load reproduces every
    parameter bit for bit. A ``checksum`` over the canonical payload is added
    so that damaged files are rejected instead of silently loading.
    """
    payload = _payload(net)
    doc = dict(payload, checksum=_digest(payload))
    return json.dumps(doc, allow_nan=False) + "\n"


def save(net: Network, destination) -> None:
    path = Path(destination)
    text = dumps(net)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _reject_constant(token):
    raise NetworkFormatError(f"non-finite value {token} is not allowed")


def _float_list(values, where: str, length: int) -> list[float]:
    if not isinstance(values, list):
        raise NetworkFormatError(f"{where}: expected an array")
    if len(values) != length:
        raise NetworkFormatError(f"{where} has length {len(values)}, expected {length}")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise NetworkFormatError(f"{where}: non-numeric entry {v!r}")
    return values


def loads(text: str) -> Network:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be an object")
    missing = [k for k in ("version", "layer_sizes", "weights", "biases") if k not in doc]
    if missing:
        raise NetworkFormatError(f"missing field(s): {', '.join(missing)}")
    unknown = sorted(set(doc) - {"version", "layer_sizes", "weights", "biases", "checksum"})
    if unknown:
        raise NetworkFormatError(f"unknown field(s): {', '.join(unknown)}")
    if doc["version"] != FORMAT_VERSION or isinstance(doc["version"], bool):
        raise NetworkFormatError(f"unsupported version {doc['version']!r}")

    sizes = doc["layer_sizes"]
    if (
        not isinstance(sizes, list)
        or len(sizes) < 2
        or any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in sizes)
    ):
        raise NetworkFormatError("layer_sizes must be an array of at least 2 positive integers")
    weights, biases = doc["weights"], doc["biases"]
    n_param_layers = len(sizes) - 1
    if not isinstance(weights, list) or len(weights) != n_param_layers:
        raise NetworkFormatError(f"weights must list {n_param_layers} layers")
    if not isinstance(biases, list) or len(biases) != n_param_layers:
        raise NetworkFormatError(f"biases must list {n_param_layers} layers")

    ws, bs = [], []
    for l in range(2, len(sizes) + 1):
        rows, cols = sizes[l - 1], sizes[l - 2]
        w = weights[l - 2]
        if not isinstance(w, list) or len(w) != rows:
            got = len(w) if isinstance(w, list) else type(w).__name__
            raise NetworkFormatError(f"layer {l}: weights have {got} rows, expected {rows}")
        for r, row in enumerate(w, start=1):
            _float_list(row, f"layer {l} weight row {r}", cols)
        _float_list(biases[l - 2], f"layer {l} biases", rows)
        ws.append(w)
        bs.append(biases[l - 2])

    if "checksum" in doc:
        payload = {k: doc[k] for k in ("version", "layer_sizes", "weights", "biases")}
        if doc["checksum"] != _digest(payload):
            raise NetworkFormatError("checksum mismatch: file is corrupted")

    try:
        return Network.from_arrays(ws, bs)
    except ValueError as exc:
        raise NetworkFormatError(str(exc)) from None


def load(source) -> Network:
    try:
        text = Path(source).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise NetworkFormatError(f"not UTF-8 text: {exc}") from None
    return loads(text)
