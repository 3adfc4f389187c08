import math

import numpy as np
import pytest

from corpus_passport.errors import TrainingError, ValidationError
from corpus_passport.som import (
    SomGrid, SomParams, best_matching_unit, bmu_indices, decay, default_grid_side, initial_grid, load_grid,
    quantization_error, random_grid, save_grid, topographic_error, train_som, u_matrix,
)


def grid(weights):
    return SomGrid(weights=np.array(weights, dtype=np.float64))


def test_bmu_examples():
    g = grid([[[0, 0], [1, 1]]])
    assert best_matching_unit(g, [0.1, 0.1]) == (0, 0)
    assert best_matching_unit(g, [1, 1]) == (0, 1)
    flat = grid(np.ones((3, 3, 2)))
    assert best_matching_unit(flat, [5, -5]) == (0, 0)
    with pytest.raises(ValidationError):
        best_matching_unit(g, [1, 2, 3])


def test_bmu_matches_exhaustive_scan():
    rng = np.random.default_rng(0)
    g = grid(rng.random((6, 7, 3)))
    queries = rng.random((1000, 3))
    got = bmu_indices(g, queries)
    w = g.flat()
    for q, u in zip(queries, got):
        dists = [math.dist(q, unit) for unit in w]
        assert u == dists.index(min(dists))


def test_umatrix_pair():
    assert u_matrix(grid([[[0, 0], [3, 4]]])).values.tolist() == [[5.0, 5.0]]


def test_umatrix_hand_2x2():
    g = grid([[[0, 0], [3, 4]], [[0, 1], [1, 1]]])
    r13 = math.sqrt(13)
    expected = np.array([[3.0, (5 + r13) / 2], [1.0, (r13 + 1) / 2]])
    assert np.max(np.abs(u_matrix(g).values - expected)) <= 1e-12


def test_umatrix_constant_and_minmax():
    g = grid(np.full((4, 5, 3), 0.3))
    assert np.all(u_matrix(g).values == 0)
    assert np.all(u_matrix(g, "minmax").values == 0)
    v = u_matrix(grid(np.random.default_rng(1).random((4, 4, 2))), "minmax").values
    assert v.min() == 0.0 and v.max() == 1.0
    with pytest.raises(ValidationError):
        u_matrix(g, "zscore")


def test_umatrix_transpose_symmetry():
    w = np.random.default_rng(2).random((3, 5, 4))
    a = u_matrix(grid(w)).values
    b = u_matrix(grid(w.transpose(1, 0, 2))).values
    assert np.allclose(a.T, b, atol=1e-12)


def test_umatrix_summary():
    s = u_matrix(grid([[[0, 0], [3, 4]]])).summary()
    assert s["mean"] == 5.0 and s["variance"] == 0.0 and s["center_edge_ratio"] is None
    v = np.zeros((3, 3, 1))
    v[1, 1, 0] = 1.0
    s = u_matrix(grid(v)).summary()
    # centre averages 4 unit edges; side cells see 1 of 3, corners none
    edge = np.array([0, 1 / 3, 0, 1 / 3, 1 / 3, 0, 1 / 3, 0])
    assert s["center_edge_ratio"] == pytest.approx(1.0 / edge.mean())


def test_quantization_error_examples():
    g = grid([[[0, 0], [1, 1]]])
    assert quantization_error(g, [[0, 0], [1, 1]]) == 0.0
    single = grid([[[0, 0]]])
    assert quantization_error(single, [[1, 0], [0, -1], [0.6, 0.8]]) == pytest.approx(1.0)


def test_quantization_error_oracle():
    rng = np.random.default_rng(3)
    g = grid(rng.random((5, 5, 4)))
    x = rng.random((300, 4))
    expected = np.mean([min(math.dist(p, u) for u in g.flat()) for p in x])
    assert quantization_error(g, x) == pytest.approx(expected, rel=1e-12)


def test_topographic_error_examples():
    g = grid([[[0, 0], [1, 1]]])
    x = np.random.default_rng(4).random((50, 2)) * 3 - 1
    assert topographic_error(g, x) == 0.0
    # two nearest units at opposite corners of a 2x2 grid
    diag = grid([[[0, 0], [10, 0]], [[0, 10], [0.2, 0]]])
    assert topographic_error(diag, [[0.1, 0]]) == 1.0
    assert 0.0 <= topographic_error(grid(np.random.default_rng(5).random((4, 4, 2))), x) <= 1.0


def test_params_validation():
    assert SomParams(rows=6, cols=8).sigma0 == 4.0
    with pytest.raises(ValidationError):
        SomParams(rows=1)
    with pytest.raises(ValidationError):
        SomParams(lr0=0.01, lr_final=0.5)


def test_decay_endpoints():
    assert decay(5.0, 0.5, 0, 10) == 5.0
    assert decay(5.0, 0.5, 10, 10) == pytest.approx(0.5)
    vals = [decay(5.0, 0.5, t, 10) for t in range(11)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_default_grid_side():
    assert default_grid_side(10_000) == math.ceil(math.sqrt(500))
    assert default_grid_side(1) == 3


def test_random_grid_inside_range():
    x = np.array([[0.0, 10.0], [1.0, 20.0]])
    w = random_grid(x, 4, 4, 0)
    assert np.all((w[..., 0] >= 0) & (w[..., 0] <= 1) & (w[..., 1] >= 10) & (w[..., 1] <= 20))


def test_single_input_starts_on_input():
    x = np.array([[0.3, -0.7, 2.0]])
    g = train_som(x, SomParams(rows=3, cols=3, epochs=2))
    assert np.allclose(g.flat(), x)


def test_single_input_qe_decreases():
    x = np.array([[0.0, 0.0]])
    init = np.random.default_rng(2).random((3, 3, 2)) + 1.0
    qes, spread = [], []

    def track(epoch, gr):
        qes.append(quantization_error(gr, x))
        spread.append(float(np.abs(gr.flat() - x).max()))

    train_som(x, SomParams(rows=3, cols=3, epochs=10, seed=2), epoch_callback=track,
              initial_weights=init)
    assert len(qes) == 10
    assert all(a > b for a, b in zip(qes, qes[1:]))
    assert all(a > b for a, b in zip(spread, spread[1:]))


def test_initial_weights_shape_checked():
    with pytest.raises(ValidationError):
        train_som(np.zeros((2, 2)), SomParams(rows=2, cols=2, epochs=1), initial_weights=np.zeros((3, 3, 2)))


def test_empty_and_bad_input():
    with pytest.raises(TrainingError):
        train_som(np.empty((0, 3)))
    with pytest.raises(ValidationError):
        train_som([[np.nan, 1.0]])


def test_deterministic():
    x = np.random.default_rng(6).random((100, 2))
    p = SomParams(rows=4, cols=4, epochs=3, seed=5)
    assert np.array_equal(train_som(x, p).weights, train_som(x, p).weights)


def test_uniform_square_quality():
    x = np.random.default_rng(0).random((500, 2))
    p = SomParams(rows=10, cols=10, epochs=20, seed=0)
    g = train_som(x, p)
    assert topographic_error(g, x) <= 0.25


def test_grid_roundtrip(tmp_path):
    g = train_som(np.random.default_rng(7).random((30, 3)), SomParams(rows=3, cols=4, epochs=2))
    save_grid(g, tmp_path)
    back = load_grid(tmp_path)
    assert back.weights.shape == (3, 4, 3)
    assert np.allclose(back.weights, g.weights, atol=1e-6)
    assert back.params == g.params


def test_initial_grid_is_training_start():
    x = np.random.default_rng(8).random((20, 2))
    p = SomParams(rows=3, cols=3, epochs=1, seed=4)
    start = initial_grid(x, p).weights
    seen = []
    train_som(x, p, epoch_callback=lambda e, g: seen.append(g.weights.copy()))
    again = train_som(x, p, initial_weights=start)
    assert np.array_equal(seen[0], again.weights)
