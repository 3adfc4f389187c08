"""Exact t-SNE for small point sets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CalibrationError, ValidationError

MAX_POINTS = 2000
DISTANCE_FLOOR = 1e-12
MOMENTUM_SWITCH = 250
MIN_GAIN = 0.01


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 5.0
    iterations: int = 1000
    learning_rate: float = 100.0
    early_exaggeration: float = 4.0
    exaggeration_steps: int = 100
    seed: int = 42
    adaptive_gains: bool = True

    def __post_init__(self):
        if self.perplexity < 1:
            raise ValidationError("perplexity must be >= 1")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")


@dataclass
class Projection2D:
    points: np.ndarray
    labels: list
    kl_trace: list = None


def _row_distribution(sq_dist, beta):
    shifted = sq_dist - sq_dist.min()
    p = np.exp(-shifted * beta)
    s = p.sum()
    p /= s
    nz = p > 0
    entropy = -float(np.sum(p[nz] * np.log2(p[nz])))
    return p, entropy


def calibrate_perplexity(distances_row, target: float, tol: float = 1e-5,
                         max_steps: int = 100) -> np.ndarray:
    """Conditional probabilities exp(-beta d^2) whose perplexity 2**H hits ``target``.

    Bisection runs on log(beta); raises CalibrationError when the target
    cannot be reached within ``tol``.
    """
    d = np.asarray(distances_row, dtype=np.float64)
    n = d.shape[0]
    if n < 1 or not np.all(np.isfinite(d)):
        raise CalibrationError("need at least one finite distance")
    if not 1 <= target <= n:
        raise CalibrationError(f"perplexity target {target} outside [1, {n}]")
    sq = d ** 2
    spread = float(sq.max() - sq.min())
    if spread == 0.0:
        p = np.full(n, 1.0 / n)
        if abs(n - target) > tol:
            raise CalibrationError("all distances are equal; perplexity is fixed at the neighbour count")
        return p
    # log-beta bracket wide enough for both limits at double precision
    lo, hi = math.log(1e-10 / spread), math.log(1e5 / (spread * 1e-12) + 1.0)
    p, entropy = None, None
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        p, entropy = _row_distribution(sq, math.exp(mid))
        perp = 2.0 ** entropy
        if abs(perp - target) <= tol:
            return p
        if perp > target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"perplexity {2.0 ** entropy:.6g} did not reach {target} within {max_steps} steps")


def joint_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    n = x.shape[0]
    dist = np.sqrt(np.maximum(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2), 0.0))
    cond = np.zeros((n, n))
    for i in range(n):
        others = np.r_[0:i, i + 1:n]
        row = np.maximum(dist[i, others], DISTANCE_FLOOR)
        if np.ptp(row) == 0.0:
            # equidistant neighbours admit only the uniform distribution
            cond[i, others] = 1.0 / (n - 1)
        else:
            cond[i, others] = calibrate_perplexity(row, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    return p


def student_affinities(y: np.ndarray):
    """(Q, 1 / (1 + |y_i - y_j|^2)) with a zero diagonal."""
    sq = ((y[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
    num = 1.0 / (1.0 + sq)
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    q, _ = student_affinities(y)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], 1e-300))))


def kl_gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """4 * sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)."""
    q, num = student_affinities(y)
    w = (p - q) * num
    return 4.0 * (w.sum(axis=1)[:, None] * y - w @ y)


def tsne(vectors, labels=None, p: Optional[TsneParams] = None, kl_every: int = 0) -> Projection2D:
    """Project ``vectors`` to 2-D by gradient descent with momentum on KL(P||Q).

    Momentum is 0.5 for the first 250 steps and 0.8 afterwards; P is
    multiplied by ``early_exaggeration`` during the first
    ``exaggeration_steps``. Per-coordinate gains grow by 0.2 when the
    gradient sign opposes the velocity and shrink by 0.8 otherwise. With ``kl_every`` > 0 the KL divergence is
    recorded every that many steps.
    """
    p = p or TsneParams()
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("vectors must be a 2-d matrix")
    n = x.shape[0]
    if n < 3:
        raise ValidationError("t-SNE needs at least 3 points")
    if n > MAX_POINTS:
        raise ValidationError(f"exact t-SNE is limited to {MAX_POINTS} points, got {n}")
    if p.perplexity >= n:
        raise ValidationError(f"perplexity must be < number of points ({n})")
    if not np.all(np.isfinite(x)):
        raise ValidationError("vectors contain non-finite values")
    labels = list(labels) if labels is not None else [str(i) for i in range(n)]
    if len(labels) != n:
        raise ValidationError("labels must align with vectors")

    P = joint_probabilities(x, p.perplexity)
    rng = np.random.default_rng(p.seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    trace = []
    for it in range(p.iterations):
        exag = p.early_exaggeration if it < p.exaggeration_steps else 1.0
        momentum = 0.5 if it < MOMENTUM_SWITCH else 0.8
        grad = kl_gradient(P * exag, y)
        if p.adaptive_gains:
            flip = np.sign(grad) != np.sign(velocity)
            gains = np.maximum(np.where(flip, gains + 0.2, gains * 0.8), MIN_GAIN)
        velocity = momentum * velocity - p.learning_rate * gains * grad
        y = y + velocity
        if kl_every and (it + 1) % kl_every == 0:
            trace.append((it + 1, kl_divergence(P, y)))
    if not np.all(np.isfinite(y)):
        raise ValidationError("t-SNE produced non-finite coordinates")
    return Projection2D(points=y, labels=labels, kl_trace=trace)


def write_projection_csv(proj: Projection2D, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,x,y\n")
        for label, (a, b) in zip(proj.labels, proj.points):
            safe = '"' + label.replace('"', '""') + '"' if ("," in label or '"' in label) else label
            fh.write(f"{safe},{a:.6g},{b:.6g}\n")
