import numpy as np
import pytest

from conftest import central_diff, rel_err
from fvrpose import so3
from fvrpose.errors import InvalidInputError, TrainingDivergedError
from fvrpose.fvr import FvrParams
from fvrpose.regressor import (
    REPRESENTATIONS,
    AdamState,
    DenseNet,
    HeadConfig,
    Layer,
    TrainConfig,
    adam_step,
    backward,
    forward,
    fvr_grid_search,
    init_net,
    make_codec,
    run_representation_experiment,
)
from fvrpose.regressor.experiment import build_nets, head_loss_and_grads, make_dataset, make_template

TINY = TrainConfig(max_epochs=3, n_train=256, n_test=64, hidden=(16, 16), template_points=8, batch_size=32)


def test_zero_net_and_identity():
    net = DenseNet([Layer(np.zeros((4, 3)), np.zeros(3))])
    np.testing.assert_array_equal(forward(net, np.ones(4)), np.zeros(3))
    ident = DenseNet([Layer(np.eye(5), np.zeros(5))])
    x = np.arange(5.0)
    np.testing.assert_array_equal(forward(ident, x), x)


def test_forward_deterministic_and_checked(rng):
    net = init_net((6, 10, 4), 3)
    x = rng.standard_normal((5, 6))
    np.testing.assert_array_equal(forward(net, x), forward(net, x))
    with pytest.raises(InvalidInputError):
        forward(net, np.ones(5))
    with pytest.raises(InvalidInputError):
        DenseNet([Layer(np.zeros((2, 3)), np.zeros(3)), Layer(np.zeros((4, 1)), np.zeros(1))])


def _flat(params):
    return np.concatenate([p.ravel() for p in params])


def _unflat(net, v):
    out, i = [], 0
    for p in net.params():
        out.append(v[i: i + p.size].reshape(p.shape))
        i += p.size
    return out


def _net_grad_check(net, x, target, loss="mse"):
    _, grads = head_loss_and_grads(net, x, target, loss)

    def f(v):
        y = forward(net.with_params(_unflat(net, v)), x)
        return np.mean((y - target) ** 2) if loss == "mse" else head_loss_and_grads(
            net.with_params(_unflat(net, v)), x, target, loss)[0]

    return rel_err(_flat(grads), central_diff(f, _flat(net.params())))


def test_linear_layer_zero_gradient_at_target(rng):
    net = DenseNet([Layer(rng.standard_normal((2, 2)), rng.standard_normal(2))])
    x = rng.standard_normal((3, 2))
    _, grads = head_loss_and_grads(net, x, forward(net, x))
    for g in grads:
        np.testing.assert_array_equal(g, 0)


def test_hand_worked_linear_layer():
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    net = DenseNet([Layer(W, np.zeros(2))])
    x = np.array([[1.0, -1.0]])
    # y = x W = (-2, -2); loss = mean((y - 0)^2) -> dL/dy = y = (-2, -2); dW = x^T dL/dy
    dW, db = backward(net, x, forward(net, x))
    np.testing.assert_array_equal(dW, [[-2, -2], [2, 2]])
    np.testing.assert_array_equal(db, [-2, -2])
    assert _net_grad_check(net, x, np.zeros((1, 2))) < 1e-8


def test_deep_net_gradient(rng):
    net = init_net((5, 8, 8, 8, 3), 1)
    assert _net_grad_check(net, rng.standard_normal((4, 5)), rng.standard_normal((4, 3))) < 1e-4


@pytest.mark.parametrize("representation", REPRESENTATIONS)
@pytest.mark.parametrize("mode", ["whole", "decoupled"])
def test_pipeline_gradient_every_head(representation, mode, rng):
    cfg = TrainConfig(hidden=(12,), template_points=4)
    head = HeadConfig(mode, representation, FvrParams.from_degrees(30, 60, 10))
    template = make_template(cfg)
    R, x = make_dataset(cfg, template, 6, "grad")
    y = head.codec.encode(R)
    for net, sl in zip(build_nets(head, cfg), head.head_slices()):
        assert _net_grad_check(net, x, y[:, sl]) < 1e-4


def test_adam_examples(rng):
    params = [rng.standard_normal((3, 2)), rng.standard_normal(2)]
    state = AdamState.for_params(params)
    new, _ = adam_step(params, [np.zeros_like(p) for p in params], state, 1e-2)
    for a, b in zip(params, new):
        np.testing.assert_array_equal(a, b)
    new, _ = adam_step(params, [np.ones_like(p) for p in params], state, 0.0)
    for a, b in zip(params, new):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(TrainingDivergedError):
        adam_step(params, [np.full_like(p, np.nan) for p in params], state, 1e-3)


def test_adam_constant_gradient_moves_against_it():
    p = [np.array([0.0, 0.0])]
    g = [np.array([1.0, -2.0])]
    state = AdamState.for_params(p)
    history = [p[0].copy()]
    for _ in range(50):
        p, state = adam_step(p, g, state, 0.01)
        history.append(p[0].copy())
    h = np.array(history)
    assert np.all(np.diff(h[:, 0]) < 0) and np.all(np.diff(h[:, 1]) > 0)
    # bias-corrected first step equals lr * sign(g)
    p1, _ = adam_step([np.zeros(2)], g, AdamState.for_params([np.zeros(2)]), 0.01)
    np.testing.assert_allclose(p1[0], [-0.01, 0.01], rtol=1e-6)


@pytest.mark.parametrize("representation", REPRESENTATIONS)
def test_codec_round_trip(representation, rng):
    codec = make_codec(representation, FvrParams.from_degrees(90, 270, 50))
    R = so3.random_rotations(200, rng)
    y = codec.encode(R)
    assert y.shape == (200, codec.dim)
    assert np.max(so3.geodesic_error(codec.decode(y), R)) < 1e-9


def test_head_slices_cover_outputs():
    for rep in REPRESENTATIONS:
        for mode in ("whole", "decoupled"):
            sl = HeadConfig(mode, rep).head_slices()
            covered = np.concatenate([np.arange(s.start, s.stop) for s in sl])
            np.testing.assert_array_equal(covered, np.arange(make_codec(rep).dim))
    assert len(HeadConfig("decoupled", "fvr").head_slices()) == 2
    assert len(HeadConfig("decoupled", "quaternion").head_slices()) == 4


def test_experiment_deterministic():
    a = run_representation_experiment(HeadConfig("whole", "r6d"), TINY)
    b = run_representation_experiment(HeadConfig("whole", "r6d"), TINY)
    assert a == b
    np.testing.assert_array_equal(a.errors_deg, b.errors_deg)
    assert np.all((a.errors_deg >= 0) & (a.errors_deg <= 180))
    assert a.mean == pytest.approx(a.errors_deg.mean())


def test_fvr_vs_r6d_structure():
    p = FvrParams(0, 0, 1, 1)
    assert make_codec("r6d").dim == 6 and make_codec("fvr", p).dim == 12
    nets_r6d = build_nets(HeadConfig("whole", "r6d"), TINY)
    nets_fvr = build_nets(HeadConfig("whole", "fvr", p), TINY)
    assert nets_r6d[0].out_dim == 6 and nets_fvr[0].out_dim == 12
    R = so3.random_rotations(10, 0)
    y = make_codec("fvr", p).encode(R)
    np.testing.assert_array_equal(y[:, [0, 1, 2, 6, 7, 8]], 0)
    np.testing.assert_allclose(y[:, [9, 10, 11, 3, 4, 5]], make_codec("r6d").encode(R), atol=1e-15)


def test_divergence_reported():
    cfg = TrainConfig(max_epochs=2, n_train=64, n_test=16, hidden=(8,), template_points=4, lr=1e300)
    with pytest.raises(TrainingDivergedError) as info:
        run_representation_experiment(HeadConfig("whole", "fvr", FvrParams(0, 0, 1e300, 1e300)), cfg)
    assert info.value.epoch is not None


def test_matrix_baseline_learns():
    cfg = TrainConfig(max_epochs=30, seed=0)
    rep = run_representation_experiment(HeadConfig("whole", "matrix"), cfg)
    assert rep.mean < 5.0


def test_grid_single_cell():
    res = fvr_grid_search(TINY, l_values=[10], angles_deg=[60])
    assert (res.best.l, res.best.theta_g_deg, res.best.theta_r_deg) == (10, 60, 60)
    assert len(res.cells) == 3


def test_grid_argmin_matches_table():
    res = fvr_grid_search(TINY, l_values=[1, 10, 100], angles_deg=[0, 90, 180])
    assert [c.sweep for c in res.cells] == ["L"] * 3 + ["theta_g"] * 3 + ["theta_r"] * 3
    ok = [c for c in res.cells if c.ok]
    brute = min(ok, key=lambda c: (c.mean_error, c.l, c.theta_g_deg, c.theta_r_deg))
    assert (brute.l, brute.theta_g_deg, brute.theta_r_deg) == (res.best.l, res.best.theta_g_deg, res.best.theta_r_deg)
    assert res.best_report.mean == res.best.mean_error


def test_grid_symmetric_searches_l_only():
    res = fvr_grid_search(TINY, symmetric=True, l_values=[1, 10])
    assert [c.sweep for c in res.cells] == ["L", "L"]
    assert res.best.theta_g_deg == 0 and res.best.theta_r_deg == 0
