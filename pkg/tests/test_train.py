import numpy as np
import pytest

from gslearn.errors import ParameterError, TrainingError
from gslearn.synth import GraphEnsembleSpec, SignalModelSpec, build_dataset
from gslearn.unroll import init_model
from gslearn.unroll.train import Adam, TrainConfig, evaluate, loss, train


@pytest.fixture(scope="module")
def small_ds():
    return build_dataset(GraphEnsembleSpec("ER", 8, {"p": 0.4}, 1),
                         SignalModelSpec(model="diffuse", p_signals=30, noise_sigma=0.01),
                         "covariance", {"train": 6, "val": 3, "test": 3})


def test_loss_examples():
    a = np.array([[0., 1], [1, 0]])
    assert loss(a, a, "mse")[0] == 0.0
    assert loss(np.zeros_like(a), a, "mse")[0] == 1.0
    # empty target: denominator clamps to 1
    assert loss(a, np.zeros_like(a), "mse")[0] == 2.0
    with pytest.raises(ParameterError):
        loss(a, a, "hinge")


@pytest.mark.parametrize("kind", ["mse", "nll_logistic"])
def test_loss_gradient_finite_differences(kind):
    rng = np.random.default_rng(0)
    est = rng.uniform(0, 1, (2, 5, 5))
    tgt = (rng.uniform(0, 1, (2, 5, 5)) > 0.6).astype(float)
    _, g = loss(est, tgt, kind)
    h = 1e-6
    for idx in [(0, 1, 2), (1, 3, 4), (0, 4, 0), (1, 2, 2)]:
        e = np.zeros_like(est)
        e[idx] = h
        fd = (loss(est + e, tgt, kind)[0] - loss(est - e, tgt, kind)[0]).sum() / (2 * h)
        assert abs(fd - g[idx]) <= 1e-8 * max(1.0, abs(fd))


def test_adam_first_step_moves_by_learning_rate():
    p = np.array([1.0, -2.0])
    Adam(lr=0.1).step(p, np.array([3.0, -0.5]))
    assert np.allclose(p, [0.9, -1.9])


def test_zero_learning_rate_keeps_parameters(small_ds):
    model = init_model("gdn", 3, seed=2)
    trained, report = train(model, small_ds, TrainConfig(epochs=4, learning_rate=0.0, batch_size=4))
    assert np.array_equal(trained.raw, model.raw)
    assert len(set(report.val_loss)) == 1 and len(set(report.train_loss)) == 1


def test_train_does_not_mutate_input_and_is_deterministic(small_ds):
    model = init_model("gdn", 3, seed=2)
    before = model.raw.copy()
    cfg = TrainConfig(epochs=5, learning_rate=1e-2, batch_size=4, seed=3)
    a, ra = train(model, small_ds, cfg)
    b, rb = train(model, small_ds, cfg)
    assert np.array_equal(model.raw, before)
    assert a.raw.tobytes() == b.raw.tobytes() and ra.val_loss == rb.val_loss


def test_best_validation_checkpoint_is_kept(small_ds):
    model = init_model("gdn", 3, seed=2)
    trained, report = train(model, small_ds, TrainConfig(epochs=8, learning_rate=0.2, batch_size=2))
    assert report.best_val_loss == min(report.val_loss)
    assert report.best_epoch == int(np.argmin(report.val_loss)) + 1
    from gslearn.unroll.train import mean_loss
    s, a = small_ds.split("val")
    assert mean_loss(trained, s, a) == pytest.approx(report.best_val_loss, rel=1e-12)


def test_patience_stops_early(small_ds):
    model = init_model("gdn", 2, seed=0)
    _, report = train(model, small_ds, TrainConfig(epochs=50, learning_rate=0.0, patience=3))
    assert len(report.val_loss) == 4


def test_epoch_count_and_report_lengths(small_ds):
    _, report = train(init_model("gdn", 2), small_ds, TrainConfig(epochs=200, batch_size=8))
    assert len(report.train_loss) == len(report.val_loss) == len(report.epoch_seconds) == 200
    assert report.test is not None and report.test.count == 3


def test_single_instance_overfit():
    ds = build_dataset(GraphEnsembleSpec("ER", 8, {"p": 0.4}, 5),
                       SignalModelSpec(model="diffuse", p_signals=1000), "covariance",
                       {"train": 1, "val": 1, "test": 0})
    ds.similarity[1], ds.adjacency[1] = ds.similarity[0], ds.adjacency[0]
    _, report = train(init_model("gdn", 1, seed=0), ds,
                      TrainConfig(epochs=500, learning_rate=0.05, batch_size=1))
    assert report.train_loss[-1] <= 0.1 * report.train_loss[0]


def test_positivity_survives_aggressive_updates(small_ds):
    trained, _ = train(init_model("l2g", 2), _as_distance(small_ds),
                       TrainConfig(epochs=10, learning_rate=5.0, batch_size=3))
    eff = trained.effective_all()
    assert np.all(eff > 0)


def _as_distance(ds):
    from gslearn.synth import Dataset, similarity
    sims = np.stack([similarity(x, "distance") / x.shape[1] for x in ds.signals])
    return Dataset(ds.adjacency, ds.signals, sims, "distance", ds.sizes, ds.metadata)


def test_non_finite_loss_aborts(small_ds):
    from gslearn.synth import Dataset
    sims = small_ds.similarity.copy()
    sims[:] = np.inf
    broken = Dataset(small_ds.adjacency, small_ds.signals, sims, "covariance", small_ds.sizes)
    with np.errstate(all="ignore"), pytest.raises(TrainingError, match="epoch 1, batch 0"):
        train(init_model("gdn", 2), broken, TrainConfig(epochs=1))


def test_evaluate_is_pure_and_perfect_model_scores(small_ds):
    model = init_model("gdn", 2)
    before = model.raw.copy()
    r1, r2 = evaluate(model, small_ds), evaluate(model, small_ds)
    assert r1 == r2 and np.array_equal(model.raw, before)
    # a depth-1 gdn with c = (0, 1), beta = 0 and t = 1/2 maps S = A exactly to A
    from gslearn.synth import Dataset
    from gslearn.unroll import tied_model
    exact = Dataset(small_ds.adjacency, small_ds.signals, small_ds.adjacency, "covariance",
                    small_ds.sizes)
    perfect = tied_model("gdn", 1, [1e-300, 0.5, 0.0, 1.0])
    rep = evaluate(perfect, exact)
    assert rep.f1 == 1.0 and rep.mse == 0.0
