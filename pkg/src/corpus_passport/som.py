"""Rectangular self-organizing maps, u-matrix and map-quality errors."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from .errors import TrainingError, ValidationError


@dataclass(frozen=True)
class SomParams:
    rows: int = 10
    cols: int = 10
    epochs: int = 20
    sigma0: Optional[float] = None  # None -> max(rows, cols) / 2
    sigma_final: float = 0.5
    lr0: float = 0.5
    lr_final: float = 0.01
    seed: int = 42

    def __post_init__(self):
        if self.sigma0 is None:
            object.__setattr__(self, "sigma0", max(self.rows, self.cols) / 2.0)
        if self.rows < 2 or self.cols < 2:
            raise ValidationError("rows and cols must be >= 2")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not self.sigma0 >= self.sigma_final > 0:
            raise ValidationError("need sigma0 >= sigma_final > 0")
        if not self.lr0 >= self.lr_final > 0:
            raise ValidationError("need lr0 >= lr_final > 0")


def default_grid_side(n: int) -> int:
    """Square side for roughly 5 * sqrt(n) units."""
    return max(2, math.ceil(math.sqrt(5.0 * math.sqrt(max(n, 1)))))


@dataclass
class SomGrid:
    weights: np.ndarray      # rows x cols x dim
    trained_on: str = "words"
    params: Optional[SomParams] = None

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]

    @property
    def dim(self) -> int:
        return self.weights.shape[2]

    def flat(self) -> np.ndarray:
        return self.weights.reshape(self.rows * self.cols, self.dim)


@dataclass(frozen=True)
class UMatrix:
    values: np.ndarray
    normalization: str = "none"

    def summary(self) -> dict:
        v = self.values
        rows, cols = v.shape
        summary = {"variance": float(np.var(v)), "mean": float(np.mean(v)),
                   "center_edge_ratio": None}
        if rows >= 3 and cols >= 3:
            inner = v[1:-1, 1:-1]
            edge_sum = float(v.sum() - inner.sum())
            edge_mean = edge_sum / (v.size - inner.size)
            if edge_mean > 0:
                summary["center_edge_ratio"] = float(inner.mean()) / edge_mean
        return summary


def _as_matrix(vectors) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("vectors must be a 2-d matrix")
    if x.shape[0] == 0:
        raise ValidationError("vectors must contain at least one row")
    if not np.all(np.isfinite(x)):
        raise ValidationError("vectors contain non-finite values")
    return x


def decay(start: float, end: float, t: int, total: int) -> float:
    """Exponential schedule start * (end / start) ** (t / total)."""
    return start * (end / start) ** (t / total)


@numba.njit(cache=True)
def _train(w, coords, x, order, sigma0, sigma_f, lr0, lr_f, t0, total):
    n_units, dim = w.shape
    t = t0
    for idx in order:
        frac = t / total
        sigma = sigma0 * (sigma_f / sigma0) ** frac
        lr = lr0 * (lr_f / lr0) ** frac
        best, best_d = 0, np.inf
        for u in range(n_units):
            d = 0.0
            for k in range(dim):
                diff = x[idx, k] - w[u, k]
                d += diff * diff
            if d < best_d:
                best_d = d
                best = u
        inv = 1.0 / (2.0 * sigma * sigma)
        br, bc = coords[best, 0], coords[best, 1]
        for u in range(n_units):
            dr = coords[u, 0] - br
            dc = coords[u, 1] - bc
            h = math.exp(-(dr * dr + dc * dc) * inv)
            a = lr * h
            if a < 1e-12:
                continue
            for k in range(dim):
                w[u, k] += a * (x[idx, k] - w[u, k])
        t += 1
    return t


def random_grid(vectors, rows: int, cols: int, seed: int) -> np.ndarray:
    """Weights drawn uniformly inside the per-dimension input range."""
    x = _as_matrix(vectors)
    rng = np.random.default_rng(seed)
    lo, hi = x.min(axis=0), x.max(axis=0)
    return lo + (hi - lo) * rng.random((rows, cols, x.shape[1]))


def initial_grid(vectors, p: Optional[SomParams] = None, trained_on: str = "words") -> SomGrid:
    """The seeded starting grid ``train_som`` uses before any update."""
    p = p or SomParams()
    x = _as_matrix(vectors)
    rng = np.random.default_rng(p.seed)
    return SomGrid(random_grid(x, p.rows, p.cols, int(rng.integers(2 ** 31 - 1))), trained_on, p)


def train_som(vectors, p: Optional[SomParams] = None, trained_on: str = "words",
              epoch_callback=None, initial_weights=None) -> SomGrid:
    """Online SOM with a Gaussian neighbourhood over grid coordinates.

    Radius and learning rate decay exponentially over epochs * N steps;
    inputs are visited in a fresh seeded permutation each epoch. Weights
    start uniform inside the input range unless ``initial_weights``
    (rows x cols x dim) is given.
    """
    p = p or SomParams()
    try:
        x = _as_matrix(vectors)
    except ValidationError as exc:
        if np.asarray(vectors).size == 0:
            raise TrainingError("cannot train a SOM on empty input") from exc
        raise
    rng = np.random.default_rng(p.seed)
    weights = random_grid(x, p.rows, p.cols, int(rng.integers(2 ** 31 - 1)))
    if initial_weights is not None:
        init = np.array(initial_weights, dtype=np.float64)
        if init.shape != weights.shape:
            raise ValidationError(f"initial weights shape {init.shape} != {weights.shape}")
        weights = init
    grid = SomGrid(weights=weights, trained_on=trained_on, params=p)
    w = weights.reshape(p.rows * p.cols, x.shape[1])
    rr, cc = np.divmod(np.arange(p.rows * p.cols), p.cols)
    coords = np.stack([rr, cc], axis=1).astype(np.float64)
    total = p.epochs * x.shape[0]
    t = 0
    for epoch in range(p.epochs):
        order = rng.permutation(x.shape[0])
        t = _train(w, coords, x, order, p.sigma0, p.sigma_final, p.lr0, p.lr_final, t, total)
        if epoch_callback is not None:
            epoch_callback(epoch, grid)
    return grid


def _distances(grid: SomGrid, x: np.ndarray) -> np.ndarray:
    flat = grid.flat()
    # direct differences, avoids cancellation of the expanded |x|^2 - 2xw + |w|^2 form
    return np.sqrt(((x[:, None, :] - flat[None, :, :]) ** 2).sum(axis=2))


def _check_dim(grid, x):
    if x.shape[-1] != grid.dim:
        raise ValidationError(f"vector dimension {x.shape[-1]} != grid dimension {grid.dim}")


def _chunk(grid) -> int:
    # keep the (chunk, units, dim) difference tensor near 16M entries
    return max(1, 16_000_000 // (grid.rows * grid.cols * grid.dim))


def bmu_indices(grid: SomGrid, vectors) -> np.ndarray:
    x = _as_matrix(vectors)
    _check_dim(grid, x)
    chunk = _chunk(grid)
    out = np.empty(x.shape[0], dtype=np.int64)
    for s in range(0, x.shape[0], chunk):
        out[s:s + chunk] = np.argmin(_distances(grid, x[s:s + chunk]), axis=1)
    return out


def best_matching_unit(grid: SomGrid, x) -> tuple:
    """Grid position nearest ``x``; ties go to the smallest row, then column."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("x must be a vector")
    _check_dim(grid, x)
    # argmin returns the first minimum in row-major order
    u = int(np.argmin(_distances(grid, x[None, :])[0]))
    return divmod(u, grid.cols)


def u_matrix(grid: SomGrid, normalization: str = "none") -> UMatrix:
    """Mean Euclidean distance from each unit to its 4-connected neighbours."""
    if normalization not in ("none", "minmax"):
        raise ValidationError(f"unknown normalization {normalization!r}")
    w = grid.weights
    rows, cols = grid.rows, grid.cols
    total = np.zeros((rows, cols))
    count = np.zeros((rows, cols))
    if rows > 1:
        dv = np.linalg.norm(w[1:] - w[:-1], axis=2)
        total[1:] += dv
        total[:-1] += dv
        count[1:] += 1
        count[:-1] += 1
    if cols > 1:
        dh = np.linalg.norm(w[:, 1:] - w[:, :-1], axis=2)
        total[:, 1:] += dh
        total[:, :-1] += dh
        count[:, 1:] += 1
        count[:, :-1] += 1
    values = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    if normalization == "minmax":
        lo, hi = values.min(), values.max()
        values = (values - lo) / (hi - lo) if hi > lo else np.zeros_like(values)
    return UMatrix(values=values, normalization=normalization)


def quantization_error(grid: SomGrid, vectors) -> float:
    x = _as_matrix(vectors)
    _check_dim(grid, x)
    errs, chunk = [], _chunk(grid)
    for s in range(0, x.shape[0], chunk):
        errs.append(_distances(grid, x[s:s + chunk]).min(axis=1))
    return float(np.concatenate(errs).mean())


def topographic_error(grid: SomGrid, vectors) -> float:
    """Share of inputs whose two nearest units are not 4-adjacent."""
    x = _as_matrix(vectors)
    _check_dim(grid, x)
    if grid.rows * grid.cols < 2:
        raise ValidationError("topographic error needs at least two units")
    bad, chunk = 0, _chunk(grid)
    for s in range(0, x.shape[0], chunk):
        d = _distances(grid, x[s:s + chunk])
        two = np.argsort(d, axis=1, kind="stable")[:, :2]
        r1, c1 = np.divmod(two[:, 0], grid.cols)
        r2, c2 = np.divmod(two[:, 1], grid.cols)
        bad += int(np.sum(np.abs(r1 - r2) + np.abs(c1 - c2) != 1))
    return bad / x.shape[0]


# --- persistence --------------------------------------------------------------

def save_grid(grid: SomGrid, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"rows": grid.rows, "cols": grid.cols, "dim": grid.dim,
              "trained_on": grid.trained_on,
              "params": asdict(grid.params) if grid.params else None}
    (out / "grid.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    grid.weights.astype("<f4").tofile(out / "weights.bin")


def load_grid(grid_dir) -> SomGrid:
    src = Path(grid_dir)
    header = json.loads((src / "grid.json").read_text(encoding="utf-8"))
    w = np.fromfile(src / "weights.bin", dtype="<f4").astype(np.float64)
    w = w.reshape(header["rows"], header["cols"], header["dim"])
    params = SomParams(**header["params"]) if header.get("params") else None
    return SomGrid(weights=w, trained_on=header["trained_on"], params=params)


def write_umatrix_csv(um: UMatrix, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in um.values:
            fh.write(",".join(f"{v:.6g}" for v in row) + "\n")
