import json
import math

import numpy as np
import pytest

from leapfrog_nn.linalg import ShapeError
from leapfrog_nn.network import (
    Network,
    NetworkFormatError,
    dumps,
    forward,
    load,
    loads,
    new_random,
    random_sample,
    save,
)

from conftest import bits


def test_new_random_shapes():
    net = new_random((2, 3, 1), seed=5)
    assert [w.shape for w in net.weights] == [(3, 2), (1, 3)]
    assert [b.shape for b in net.biases] == [(3,), (1,)]
    assert net.num_layers == 3


def test_new_random_deterministic_and_seed_sensitive():
    assert new_random((4, 6, 2), 9).identical_to(new_random((4, 6, 2), 9))
    assert not new_random((4, 6, 2), 1).identical_to(new_random((4, 6, 2), 2))


def test_new_random_range_and_frozen():
    net = new_random((16, 32, 8), 2**64 - 1)
    values = np.concatenate([a.ravel() for a in net.weights + net.biases])
    assert values.min() >= -0.5 and values.max() < 0.5
    with pytest.raises(ValueError):
        net.weights[0][0, 0] = 1.0


@pytest.mark.parametrize("sizes", [(), (3,), (3, 0, 2)])
def test_new_random_rejects_bad_sizes(sizes):
    with pytest.raises(ValueError):
        new_random(sizes, 0)


def test_new_random_rejects_bad_seed():
    with pytest.raises(ValueError):
        new_random((2, 2), -1)
    with pytest.raises(ValueError):
        new_random((2, 2), 2**64)


def test_forward_all_zero_parameters():
    net = Network.from_arrays([np.zeros((4, 3)), np.zeros((2, 4))], [np.zeros(4), np.zeros(2)])
    trace = forward(net, [0.3, -1.0, 2.0])
    for l in (2, 3):
        assert trace.z(l).tolist() == [0.0] * net.size(l)
        assert trace.a(l).tolist() == [0.5] * net.size(l)


def test_forward_identity_layer():
    net = Network.from_arrays([np.eye(2)], [np.zeros(2)])
    trace = forward(net, [0.0, 0.0])
    assert trace.z(2).tolist() == [0.0, 0.0]
    assert trace.a(2).tolist() == [0.5, 0.5]
    assert trace.a(1).tolist() == [0.0, 0.0]


def test_forward_matches_scalar_reevaluation():
    net = new_random((2, 3, 2), 7)
    x = [0.1, -0.2]
    trace = forward(net, x)
    a_prev = x
    for l in (2, 3):
        W, b = net.w(l).tolist(), net.b(l).tolist()
        z = []
        for row, bias in zip(W, b):
            acc = 0.0
            for w, a in zip(row, a_prev):
                acc += w * a
            z.append(acc + bias)
        a_cur = [1.0 / (1.0 + math.exp(-v)) for v in z]
        assert trace.z(l).tolist() == z
        np.testing.assert_allclose(trace.a(l), a_cur, rtol=1e-15, atol=0)
        a_prev = trace.a(l).tolist()


def test_trace_activation_is_sigmoid_of_z():
    from leapfrog_nn.linalg import sigmoid

    net = new_random((5, 7, 7, 3), 4)
    trace = forward(net, np.linspace(-1, 1, 5))
    for l in range(2, 5):
        assert bits(trace.a(l)) == bits(sigmoid(trace.z(l)))
    again = forward(net, np.linspace(-1, 1, 5))
    assert all(bits(a) == bits(b) for a, b in zip(trace.activations, again.activations))


def test_forward_input_length_mismatch():
    with pytest.raises(ShapeError, match="length 3"):
        forward(new_random((2, 2), 0), [1.0, 2.0, 3.0])


def test_random_sample_is_unit_interval_and_seeded():
    net = new_random((3, 4, 5), 0)
    x, y = random_sample(net, 12)
    x2, y2 = random_sample(net, 12)
    assert x.shape == (3,) and y.shape == (5,)
    assert bits(x) == bits(x2) and bits(y) == bits(y2)
    assert np.all((x >= 0) & (x < 1)) and np.all((y >= 0) & (y < 1))


def test_save_load_roundtrip(tmp_path):
    net = new_random((4, 9, 3), 21)
    path = tmp_path / "net.json"
    save(net, path)
    assert load(path).identical_to(net)
    doc = json.loads(path.read_text())
    assert doc["version"] == 1 and doc["layer_sizes"] == [4, 9, 3]
    assert len(doc["weights"]) == len(doc["biases"]) == 2


def test_load_without_checksum():
    net = new_random((2, 3), 1)
    doc = json.loads(dumps(net))
    del doc["checksum"]
    assert loads(json.dumps(doc)).identical_to(net)


def test_wrong_row_length_names_layer_and_row():
    doc = json.loads(dumps(new_random((2, 3, 2), 1)))
    del doc["checksum"]
    doc["weights"][1][1].append(0.0)
    with pytest.raises(NetworkFormatError, match="layer 3 weight row 2"):
        loads(json.dumps(doc))


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.update(version=2), "unsupported version"),
        (lambda d: d.pop("biases"), "missing field"),
        (lambda d: d.update(layer_sizes=[2, 4, 2]), "rows"),
        (lambda d: d["biases"][0].pop(), "layer 2 biases"),
        (lambda d: d["weights"][0][0].__setitem__(0, "x"), "non-numeric"),
    ],
)
def test_malformed_documents(mutate, message):
    doc = json.loads(dumps(new_random((2, 3, 2), 1)))
    del doc["checksum"]
    mutate(doc)
    with pytest.raises(NetworkFormatError, match=message):
        loads(json.dumps(doc))


def test_truncated_file_rejected(tmp_path):
    text = dumps(new_random((3, 4, 2), 8))
    path = tmp_path / "cut.json"
    path.write_text(text[: len(text) // 2])
    with pytest.raises(NetworkFormatError):
        load(path)


def test_nan_literal_rejected():
    doc = dumps(new_random((2, 2), 0)).replace('"weights": [[[', '"weights": [[[NaN, ', 1)
    with pytest.raises(NetworkFormatError):
        loads(doc)


def test_every_single_byte_corruption_is_rejected():
    text = dumps(new_random((2, 2, 1), 3))
    for i, ch in enumerate(text):
        if ch.isdigit():
            repl = "7" if ch != "7" else "3"
        else:
            repl = "#"
        with pytest.raises(NetworkFormatError):
            loads(text[:i] + repl + text[i + 1 :])
