import numpy as np
import pytest

from evecg import network
from evecg.network import (
    LifParams,
    MaxPool1d,
    NetworkSpec,
    ShapeError,
    SpikeCounter,
    SpikingConv1d,
    SpikingFC,
    conv1d_spiking_forward,
    default_network,
    fc_forward,
    init_weights,
    lif_step,
    load_network,
    maxpool_forward,
    network_forward,
    save_network,
    spike_counter_classify,
)

LIF = LifParams()  # threshold 1, reset 0, leak 0.01


class TestLifStep:
    def test_integrate_below_threshold(self):
        v, s = lif_step(np.array([0.5]), np.array([0.4]), LIF)
        assert v[0] == pytest.approx(0.89) and s[0] == 0.0

    def test_fire_and_reset(self):
        v, s = lif_step(np.array([0.0]), np.array([1.5]), LIF)
        assert s[0] == 1.0 and v[0] == 0.0

    def test_threshold_equality_fires(self):
        v, s = lif_step(np.array([0.99]), np.array([0.02]), LIF)
        assert s[0] == 1.0 and v[0] == 0.0

    def test_clamped_at_reset_from_below(self):
        v, s = lif_step(np.array([0.5]), np.array([-2.0]), LIF)
        assert v[0] == 0.0 and s[0] == 0.0

    def test_pure_leak(self):
        v, s = lif_step(np.array([0.5]), np.array([0.0]), LIF)
        assert v[0] == pytest.approx(0.49) and s[0] == 0.0

    def test_silent_leak_skips_driven_neurons(self):
        p = LifParams(leak_mode="silent")
        v, _ = lif_step(np.array([0.5, 0.5]), np.array([0.3, 0.0]), p)
        assert v[0] == 0.8  # exactly: no leak where input is nonzero
        assert v[1] == pytest.approx(0.49)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            LifParams(v_threshold=0.0, v_reset=0.0)
        with pytest.raises(ValueError):
            LifParams(delta_v=-0.1)
        with pytest.raises(ValueError):
            LifParams(leak_mode="sometimes")


def naive_conv_same(x, w):
    """Quadruple-loop 'same' convolution oracle; x (C, L), w (O, C, K)."""
    o_ch, c_ch, k = w.shape
    length = x.shape[1]
    lo = (k - 1) // 2
    out = np.zeros((o_ch, length))
    for o in range(o_ch):
        for p in range(length):
            acc = 0.0
            for c in range(c_ch):
                for j in range(k):
                    i = p - lo + j
                    if 0 <= i < length:
                        acc += w[o, c, j] * x[c, i]
            out[o, p] = acc
    return out


class TestConv:
    def test_single_spike_selects_weight(self):
        w = np.arange(6, dtype=np.float64).reshape(2, 1, 3)
        layer = SpikingConv1d(1, 2, 3, weights=w)
        x = np.zeros((1, 1, 5), dtype=np.int8)
        x[0, 0, 2] = 1
        z = conv1d_spiking_forward(x, layer)
        # output position p sees the spike through tap (2 - p + 1)
        assert z[0, 0].tolist() == [0.0, w[0, 0, 2], w[0, 0, 1], w[0, 0, 0], 0.0]

    def test_negative_spike_subtracts(self):
        w = np.ones((1, 1, 3))
        layer = SpikingConv1d(1, 1, 3, weights=w)
        x = np.zeros((1, 1, 3), dtype=np.int8)
        x[0, 0, 1] = -1
        assert conv1d_spiking_forward(x, layer)[0, 0].tolist() == [-1, -1, -1]

    def test_ternary_matches_naive_mac(self):
        # weights are dyadic rationals (k/2^16) so every partial sum is exact
        # in float64 and the equality is order-independent and bitwise
        rng = np.random.default_rng(7)
        for _ in range(30):
            c, o, k, n = rng.integers(1, 4), rng.integers(1, 5), \
                rng.choice([1, 3, 5]), rng.integers(6, 20)
            w = rng.integers(-2**16, 2**16, (o, c, k)) * 2.0**-16
            x = rng.integers(-1, 2, (1, c, n)).astype(np.int8)
            layer = SpikingConv1d(c, o, int(k), weights=w)
            got = conv1d_spiking_forward(x, layer)[0]
            want = naive_conv_same(x[0].astype(np.float64), w)
            assert np.array_equal(got, want)  # exact, not approx

    def test_float_input_same_result(self):
        rng = np.random.default_rng(8)
        w = rng.standard_normal((3, 2, 3))
        layer = SpikingConv1d(2, 3, 3, weights=w)
        xi = rng.integers(-1, 2, (2, 2, 9)).astype(np.int8)
        zf = conv1d_spiking_forward(xi.astype(np.float64), layer)
        zi = conv1d_spiking_forward(xi, layer)
        assert np.allclose(zf, zi, rtol=0, atol=1e-12)

    def test_valid_padding_length(self):
        layer = SpikingConv1d(1, 1, 3, padding="valid",
                              weights=np.ones((1, 1, 3)))
        z = conv1d_spiking_forward(np.ones((1, 1, 10), np.int8), layer)
        assert z.shape == (1, 1, 8)

    def test_channel_mismatch_raises(self):
        layer = SpikingConv1d(2, 1, 3, weights=np.ones((1, 2, 3)))
        with pytest.raises(ShapeError):
            conv1d_spiking_forward(np.ones((1, 1, 5), np.int8), layer)

    def test_weight_shape_checked_at_construction(self):
        with pytest.raises(ShapeError):
            SpikingConv1d(1, 2, 3, weights=np.ones((2, 1, 5)))


class TestPoolAndFc:
    def test_pool_example(self):
        x = np.array([[[1, 0, 0, 1, 1, 1]]], dtype=np.int8)
        pooled, arg = maxpool_forward(x, MaxPool1d())
        assert pooled[0, 0].tolist() == [1, 1, 1]
        assert arg[0, 0].tolist() == [0, 1, 0]  # first maximum wins

    def test_pool_drops_trailing_odd_element(self):
        x = np.zeros((1, 1, 7), dtype=np.int8)
        pooled, _ = maxpool_forward(x, MaxPool1d())
        assert pooled.shape == (1, 1, 3)

    def test_pool_matches_naive(self):
        rng = np.random.default_rng(9)
        x = rng.integers(0, 2, (4, 3, 17)).astype(np.int8)
        pooled, _ = maxpool_forward(x, MaxPool1d())
        for b in range(4):
            for c in range(3):
                for p in range(pooled.shape[2]):
                    assert pooled[b, c, p] == x[b, c, 2 * p:2 * p + 2].max()

    def test_pool_too_short_raises(self):
        with pytest.raises(ShapeError):
            maxpool_forward(np.zeros((1, 1, 1), np.int8), MaxPool1d())

    def test_fc_is_plain_matvec(self):
        w = np.array([[1.0, 2.0, 3.0], [0.0, -1.0, 0.5]])
        layer = SpikingFC(3, 2, weights=w)
        z = fc_forward(np.array([[1, 0, 1]], dtype=np.int8), layer)
        assert z[0].tolist() == [4.0, 0.5]

    def test_fc_width_mismatch_raises(self):
        layer = SpikingFC(3, 2, weights=np.zeros((2, 3)))
        with pytest.raises(ShapeError):
            fc_forward(np.zeros((1, 4), np.int8), layer)


def _toy_fc_net(w, time_steps=1, num_classes=2):
    layers = [SpikingFC(w.shape[1], w.shape[0], weights=w),
              SpikeCounter(num_classes)]
    return NetworkSpec(layers, LifParams(), time_steps, w.shape[1],
                       num_classes)


class TestNetworkForward:
    def test_zero_input_zero_weights(self):
        net = _toy_fc_net(np.zeros((2, 3)), time_steps=5)
        counts = network_forward(np.zeros((1, 1, 3), np.int8), net)
        assert counts.tolist() == [[0, 0]]

    def test_single_fc_threshold_case(self):
        w = np.array([[1.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
        net = _toy_fc_net(w, time_steps=1)
        x = np.array([[[1, 1, 0]]], dtype=np.int8)
        # z = [2, -1]; u = [1.99, clamp 0]; only unit 0 fires
        assert network_forward(x, net).tolist() == [[1, 0]]

    def test_counts_accumulate_over_steps(self):
        w = np.array([[2.0], [0.2]])
        net = _toy_fc_net(w, time_steps=4)
        x = np.ones((1, 1, 1), dtype=np.int8)
        counts = network_forward(x, net)
        # unit 0 fires every step; unit 1 integrates 0.19/step, never reaches 1
        assert counts.tolist() == [[4, 0]]

    def test_slow_integrator_fires_periodically(self):
        w = np.array([[0.35], [0.0]])
        net = _toy_fc_net(w, time_steps=10)
        x = np.ones((1, 1, 1), dtype=np.int8)
        # net gain 0.34/step -> first spike at step 3 (u=1.02), then every 3
        assert network_forward(x, net).tolist() == [[3, 0]]

    def test_matches_scalar_simulator_oracle(self):
        rng = np.random.default_rng(12)
        net = init_weights(default_network(16, time_steps=8,
                                           conv_channels=(2, 2), kernel=3,
                                           pool_after=(2,), fc_hidden=5), 3)
        x = rng.integers(-1, 2, (2, 1, 16)).astype(np.int8)
        counts = network_forward(x, net, check_binary=True)

        conv1, conv2, pool, fc1, fc2 = (net.layers[0], net.layers[1],
                                        net.layers[2], net.layers[3],
                                        net.layers[4])
        ref = np.zeros((2, 4))
        for b in range(2):
            v = [np.zeros((2, 16)), np.zeros((2, 16)), np.zeros(5), np.zeros(4)]
            for _ in range(8):
                s1 = np.zeros((2, 16))
                z = naive_conv_same(x[b].astype(np.float64), conv1.weights)
                for c in range(2):
                    for i in range(16):
                        u = max(v[0][c, i] + z[c, i] - 0.01, 0.0)
                        s1[c, i] = 1.0 if u >= 1.0 else 0.0
                        v[0][c, i] = 0.0 if s1[c, i] else u
                s2 = np.zeros((2, 16))
                z = naive_conv_same(s1, conv2.weights)
                for c in range(2):
                    for i in range(16):
                        u = max(v[1][c, i] + z[c, i] - 0.01, 0.0)
                        s2[c, i] = 1.0 if u >= 1.0 else 0.0
                        v[1][c, i] = 0.0 if s2[c, i] else u
                pooled = np.zeros((2, 8))
                for c in range(2):
                    for p in range(8):
                        pooled[c, p] = s2[c, 2 * p:2 * p + 2].max()
                flat = pooled.reshape(-1)
                s3 = np.zeros(5)
                z = fc1.weights @ flat
                for i in range(5):
                    u = max(v[2][i] + z[i] - 0.01, 0.0)
                    s3[i] = 1.0 if u >= 1.0 else 0.0
                    v[2][i] = 0.0 if s3[i] else u
                z = fc2.weights @ s3
                for i in range(4):
                    u = max(v[3][i] + z[i] - 0.01, 0.0)
                    s = 1.0 if u >= 1.0 else 0.0
                    v[3][i] = 0.0 if s else u
                    ref[b, i] += s
        assert np.array_equal(counts, ref.astype(np.int64))

    def test_no_state_leakage_between_calls(self):
        net = init_weights(default_network(32, time_steps=6), seed=0)
        rng = np.random.default_rng(4)
        x = rng.integers(-1, 2, (3, 1, 32)).astype(np.int8)
        a = network_forward(x, net)
        b = network_forward(x, net)
        assert np.array_equal(a, b)

    def test_per_step_input_must_match_time_steps(self):
        net = _toy_fc_net(np.zeros((2, 3)), time_steps=5)
        with pytest.raises(ShapeError):
            network_forward(np.zeros((4, 1, 1, 3), np.int8), net)

    def test_per_step_input_accepted(self):
        w = np.array([[1.5], [0.0]])
        net = _toy_fc_net(w, time_steps=3)
        frames = np.zeros((3, 1, 1, 1), dtype=np.int8)
        frames[1] = 1  # only the middle step drives the net
        assert network_forward(frames, net).tolist() == [[1, 0]]


class TestClassify:
    def test_argmax(self):
        assert spike_counter_classify(np.array([0, 5, 2, 1])) == 1

    def test_tie_goes_to_lowest_index(self):
        assert spike_counter_classify(np.array([3, 3, 1, 0])) == 0
        assert spike_counter_classify(np.array([0, 2, 2, 2])) == 1

    def test_batched(self):
        got = spike_counter_classify(np.array([[1, 0, 0, 0], [0, 0, 0, 9]]))
        assert got.tolist() == [0, 3]


class TestTopology:
    def test_default_network_shapes(self):
        net = default_network(80)
        kinds = [l.kind for l in net.layers]
        assert kinds == ["SpikingConv1d", "SpikingConv1d", "MaxPool1d",
                         "SpikingConv1d", "SpikingConv1d", "MaxPool1d",
                         "SpikingConv1d", "SpikingFC", "SpikingFC",
                         "SpikeCounter"]
        fc1 = net.layers[7]
        assert fc1.in_features == 20 * 32 and fc1.out_features == 64
        assert net.layers[8].out_features == 4
        assert net.time_steps == 80

    def test_counter_must_be_last(self):
        with pytest.raises(ValueError):
            NetworkSpec([SpikingFC(3, 4, weights=np.zeros((4, 3)))],
                        LifParams(), 1, 3)

    def test_init_weights_deterministic_and_bounded(self):
        a = init_weights(default_network(40), seed=5)
        b = init_weights(default_network(40), seed=5)
        for la, lb in zip(a.weighted_layers(), b.weighted_layers()):
            assert np.array_equal(la.weights, lb.weights)
        c1 = init_weights(default_network(40), seed=5, scale=1.0).weighted_layers()[0]
        bound = np.sqrt(1.0 / (c1.in_channels * c1.kernel))
        assert np.abs(c1.weights).max() <= bound
        # default scale triples the classical bound
        assert np.allclose(a.weighted_layers()[0].weights, 3.0 * c1.weights)


class TestSerialization:
    def test_roundtrip_exact_with_f4_weights(self, tmp_path):
        net = init_weights(default_network(48, time_steps=12), seed=2)
        # float32-representable weights make the round trip exact
        for l in net.weighted_layers():
            l.weights[:] = l.weights.astype(np.float32).astype(np.float64)
        path = tmp_path / "net.evn"
        save_network(path, net, extra={"note": "t"})
        back, extra = load_network(path)
        assert extra == {"note": "t"}
        assert back.time_steps == 12 and back.input_length == 48
        for la, lb in zip(net.weighted_layers(), back.weighted_layers()):
            assert np.array_equal(la.weights, lb.weights)
        x = np.random.default_rng(0).integers(-1, 2, (2, 1, 48)).astype(np.int8)
        assert np.array_equal(network_forward(x, net), network_forward(x, back))

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "junk.evn"
        p.write_bytes(b"NOTANET\x00\x00\x00\x00")
        with pytest.raises(ValueError):
            load_network(p)
