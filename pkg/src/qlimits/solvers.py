"""Classical regression solvers.

Five training routes over the same dual/primal predictor types:

* ``exact_ls``           closed-form Tikhonov least squares
* ``krr``                kernel ridge regression
* ``early_stopping_gd``  fixed-iteration gradient descent on the unregularized risk
* ``divide_and_conquer`` per-block KRR, uniformly averaged
* ``nystrom``            landmark-subsampled KRR

Regularized systems are solved by Cholesky factorization; on breakdown the
solver falls back to an eigendecomposition with eigenvalues floored at 1e-12.
Every direct solve is residual-checked to 1e-10 relative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergenceError,
    KernelNotPSDError,
    NumericalError,
    SingularSystemError,
)
from .rng import child_rng
from .synth import Dataset

RESIDUAL_RTOL = 1e-10
EIG_FLOOR = 1e-12
KERNEL_PSD_RTOL = 1e-8
POWER_ITER_TOL = 1e-6
POWER_ITER_MAX = 500


@dataclass(frozen=True)
class Kernel:
    """Linear or Gaussian kernel; Gaussian is exp(-|a-b|^2 / (2 bandwidth^2))."""

    kind: str = "linear"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind == "linear":
            if self.bandwidth is not None:
                raise ConfigError("linear kernel takes no bandwidth")
        elif self.kind == "gaussian":
            if self.bandwidth is None or not (self.bandwidth > 0):
                raise ConfigError(f"gaussian kernel needs bandwidth > 0, got {self.bandwidth}")
        else:
            raise ConfigError(f"unknown kernel kind {self.kind!r}")

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        if self.kind == "linear":
            return a @ b.T
        sq = cdist(a, b, "sqeuclidean")
        return np.exp(-sq / (2.0 * self.bandwidth**2))

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.bandwidth is not None:
            out["bandwidth"] = float(self.bandwidth)
        return out

    @staticmethod
    def from_json(obj: dict) -> "Kernel":
        extra = set(obj) - {"kind", "bandwidth"}
        if extra:
            raise ConfigError(f"unknown kernel fields: {sorted(extra)}")
        return Kernel(kind=obj.get("kind", "linear"), bandwidth=obj.get("bandwidth"))


LINEAR_KERNEL = Kernel("linear")


@dataclass(frozen=True, eq=False)
class PrimalPredictor:
    """f(x) = weights . x"""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ConfigError(f"weights must be a vector, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ConfigError("weights must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class DualPredictor:
    """f(x) = sum_j coefficients[j] * K(landmarks[j], x)"""

    coefficients: np.ndarray
    landmarks: np.ndarray
    kernel: Kernel

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64)
        lm = np.asarray(self.landmarks, dtype=np.float64)
        if lm.ndim != 2 or c.shape != (lm.shape[0],):
            raise ConfigError(
                f"coefficients {c.shape} must match landmark rows {lm.shape}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(lm))):
            raise ConfigError("dual predictor entries must be finite")
        c.flags.writeable = False
        lm.flags.writeable = False
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "landmarks", lm)

    @property
    def dimension(self) -> int:
        return self.landmarks.shape[1]


Predictor = PrimalPredictor | DualPredictor


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver options.

    ``lam=None`` resolves to the default schedule n^(-1/2); ``step_size=None``
    auto-computes a safe gradient step; ``max_iters=None`` and
    ``landmarks=None`` both resolve to ceil(sqrt(n)).
    """

    lam: float | None = None
    step_size: float | None = None
    max_iters: int | None = None
    partitions: int = 1
    landmarks: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.lam is not None and not (np.isfinite(self.lam) and self.lam >= 0):
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if self.step_size is not None and not (np.isfinite(self.step_size) and self.step_size > 0):
            raise ConfigError(f"step_size must be > 0, got {self.step_size}")
        if self.max_iters is not None and self.max_iters < 0:
            raise ConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.partitions < 1:
            raise ConfigError(f"partitions must be >= 1, got {self.partitions}")
        if self.landmarks is not None and self.landmarks < 1:
            raise ConfigError(f"landmarks must be >= 1, got {self.landmarks}")


def default_lam(n: int) -> float:
    """Default regularization schedule: n^(-1/2)."""
    return float(n) ** -0.5


def resolve_lam(lam: float | None, n: int) -> float:
    return default_lam(n) if lam is None else float(lam)


# ---------------------------------------------------------------------------
# prediction

def predict(predictor: Predictor, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError(f"expected a single point, got shape {x.shape}")
    return float(predict_batch(predictor, x[None, :])[0])


def predict_batch(predictor: Predictor, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != predictor.dimension:
        raise DimensionMismatchError(
            f"point dimension {x.shape[1]} != predictor dimension {predictor.dimension}"
        )
    if isinstance(predictor, PrimalPredictor):
        return x @ predictor.weights
    return predictor.kernel.matrix(x, predictor.landmarks) @ predictor.coefficients


# ---------------------------------------------------------------------------
# SPD solving with residual gate

def _gated(solve, m: np.ndarray, rhs: np.ndarray, context: str) -> np.ndarray:
    """Apply ``solve``, verify the residual gate, refine once if needed."""
    sol = solve(rhs)
    rhs_norm = np.linalg.norm(rhs)
    residual = rhs - m @ sol
    if np.linalg.norm(residual) > RESIDUAL_RTOL * rhs_norm:
        sol = sol + solve(residual)  # one step of iterative refinement
        residual = rhs - m @ sol
        if np.linalg.norm(residual) > RESIDUAL_RTOL * rhs_norm:
            raise NumericalError(
                f"{context}: solve residual {np.linalg.norm(residual):.3e} exceeds "
                f"{RESIDUAL_RTOL:.0e} * |rhs| = {RESIDUAL_RTOL * rhs_norm:.3e}"
            )
    return sol


def _eig_clip_solver(m: np.ndarray):
    evals, vecs = scipy.linalg.eigh(m)
    evals = np.maximum(evals, EIG_FLOOR)
    return lambda r: vecs @ ((vecs.T @ r) / evals)


def _solve_spd(m: np.ndarray, rhs: np.ndarray, context: str) -> np.ndarray:
    """Cholesky solve with eigendecomposition fallback and residual check."""
    try:
        factor = scipy.linalg.cho_factor(m, check_finite=False)
        solve = lambda r: scipy.linalg.cho_solve(factor, r, check_finite=False)
    except scipy.linalg.LinAlgError:
        solve = _eig_clip_solver(m)
    return _gated(solve, m, rhs, context)


def _check_not_singular(m: np.ndarray, context: str) -> None:
    evals = scipy.linalg.eigvalsh(m)
    top = float(evals[-1])
    if top <= 0 or float(evals[0]) <= EIG_FLOOR * top:
        raise SingularSystemError(
            f"{context}: system is numerically singular at lam=0 "
            f"(eigenvalue range [{evals[0]:.3e}, {top:.3e}])"
        )


# ---------------------------------------------------------------------------
# solvers

def exact_ls(dataset: Dataset, lam: float | None = None) -> PrimalPredictor:
    """Closed-form solve of (sum x_i x_i^T + lam*n*I) w = sum y_i x_i."""
    n = dataset.n_samples
    lam = resolve_lam(lam, n)
    if lam < 0:
        raise ConfigError(f"lam must be >= 0, got {lam}")
    a, y = dataset.features, dataset.labels
    gram = a.T @ a
    rhs = a.T @ y
    if lam == 0.0:
        _check_not_singular(gram, "exact_ls")
        system = gram
    else:
        system = gram + (lam * n) * np.eye(dataset.dimension)
    w = _solve_spd(system, rhs, "exact_ls")
    return PrimalPredictor(weights=w)


def krr(dataset: Dataset, kernel: Kernel = LINEAR_KERNEL, lam: float | None = None) -> DualPredictor:
    """Kernel ridge regression: coefficients (K + lam*n*I)^(-1) y on all points.

    The built-in kernels are PSD by construction, so the full eigencheck runs
    only on the cold path where Cholesky factorization breaks down.
    """
    n = dataset.n_samples
    lam = resolve_lam(lam, n)
    if not lam > 0:
        raise ConfigError(f"krr requires lam > 0, got {lam}")
    k = kernel.matrix(dataset.features, dataset.features)
    k.flat[:: n + 1] += lam * n  # in place: K becomes K + lam*n*I
    try:
        factor = scipy.linalg.cho_factor(k, check_finite=False)
        solve = lambda r: scipy.linalg.cho_solve(factor, r, check_finite=False)
    except scipy.linalg.LinAlgError:
        check_kernel_psd(kernel.matrix(dataset.features, dataset.features))
        solve = _eig_clip_solver(k)
    alpha = _gated(solve, k, dataset.labels, "krr")
    return DualPredictor(coefficients=alpha, landmarks=dataset.features, kernel=kernel)


def check_kernel_psd(k: np.ndarray) -> None:
    """Raise unless the matrix is PSD up to eigenvalues >= -1e-8 * scale."""
    evals = scipy.linalg.eigvalsh((k + k.T) / 2.0)
    if float(evals[0]) < -KERNEL_PSD_RTOL * max(float(np.max(np.abs(evals))), 1.0):
        raise KernelNotPSDError(
            f"kernel matrix has eigenvalue {evals[0]:.3e} below PSD tolerance"
        )


def top_eigenvalue(matrix: np.ndarray, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    dim = matrix.shape[0]
    rng = child_rng(seed, "power-iteration")
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(POWER_ITER_MAX):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        new_estimate = float(v @ w)
        v = w / norm
        if abs(new_estimate - estimate) <= POWER_ITER_TOL * max(abs(new_estimate), 1e-30):
            return new_estimate
        estimate = new_estimate
    return estimate


def early_stopping_gd(
    dataset: Dataset,
    kernel: Kernel = LINEAR_KERNEL,
    config: SolverConfig = SolverConfig(),
) -> Predictor:
    """Fixed-budget full-gradient descent on the unregularized empirical risk.

    Starts from zero and runs exactly ``max_iters`` iterations (default
    ceil(sqrt(n))), relying on the iteration budget, not a penalty term, to
    regularize. The step must not exceed 1/L, where L is the top curvature
    (Hessian eigenvalue, twice the top covariance eigenvalue) of the risk;
    auto mode uses exactly 1/L, which makes the risk non-increasing.
    """
    n = dataset.n_samples
    t = config.max_iters if config.max_iters is not None else math.isqrt(n - 1) + 1
    a, y = dataset.features, dataset.labels

    if kernel.kind == "linear":
        gram = a.T @ a  # d x d
        curvature = 2.0 * top_eigenvalue(gram, seed=config.seed) / n
        step = config.step_size if config.step_size is not None else _safe_step(curvature)
        w = np.zeros(dataset.dimension)
        rises = 0
        prev_risk = float(y @ y) / n
        for _ in range(t):
            resid = a @ w - y
            w = w - step * (2.0 / n) * (a.T @ resid)
            risk = float(resid @ resid) / n  # risk at the pre-update iterate
            rises = _divergence_count(risk, prev_risk, rises, step)
            prev_risk = risk
        return PrimalPredictor(weights=w)

    k = kernel.matrix(a, a)
    curvature = 2.0 * top_eigenvalue(k, seed=config.seed) / n
    step = config.step_size if config.step_size is not None else _safe_step(curvature)
    alpha = np.zeros(n)
    rises = 0
    prev_risk = float(y @ y) / n
    for _ in range(t):
        resid = k @ alpha - y
        alpha = alpha - step * (2.0 / n) * resid
        risk = float(resid @ resid) / n
        rises = _divergence_count(risk, prev_risk, rises, step)
        prev_risk = risk
    return DualPredictor(coefficients=alpha, landmarks=a, kernel=kernel)


def _safe_step(curvature: float) -> float:
    if curvature <= 0:
        return 1.0
    return 1.0 / curvature


def _divergence_count(risk: float, prev_risk: float, rises: int, step: float) -> int:
    rises = rises + 1 if risk > prev_risk * (1.0 + 1e-12) else 0
    if rises >= 5:
        raise DivergenceError(step_size=step, n_increases=rises)
    return rises


def divide_and_conquer(
    dataset: Dataset,
    kernel: Kernel = LINEAR_KERNEL,
    config: SolverConfig = SolverConfig(),
) -> DualPredictor:
    """KRR on p disjoint blocks (seeded shuffle), predictors averaged uniformly.

    The averaged model is represented as one dual predictor: block
    coefficients scaled by 1/p over the concatenated block landmarks. ``lam``
    is resolved against the full dataset size and shared by every block.
    """
    n = dataset.n_samples
    p = config.partitions
    if p > n:
        raise ConfigError(f"partitions={p} exceeds n={n}")
    lam = resolve_lam(config.lam, n)
    perm = child_rng(config.seed, "blocks").permutation(n)
    coeffs, points = [], []
    for block in np.array_split(perm, p):
        sub = Dataset(features=dataset.features[block], labels=dataset.labels[block])
        fitted = krr(sub, kernel, lam)
        coeffs.append(fitted.coefficients / p)
        points.append(fitted.landmarks)
    return DualPredictor(
        coefficients=np.concatenate(coeffs),
        landmarks=np.concatenate(points, axis=0),
        kernel=kernel,
    )


def nystrom(
    dataset: Dataset,
    kernel: Kernel = LINEAR_KERNEL,
    config: SolverConfig = SolverConfig(),
) -> DualPredictor:
    """Landmark-subsampled KRR.

    Samples m landmarks uniformly without replacement (seeded shuffle prefix)
    and solves (Knm^T Knm + lam*n*Kmm) alpha = Knm^T y. The squared system
    can be numerically singular (e.g. near m = n, or a linear kernel with
    m > d), so factorization trouble falls back to the eigenvalue-clipped
    solve; clipping only pollutes directions the kernel then damps back out
    of the predictions.
    """
    n = dataset.n_samples
    m = config.landmarks if config.landmarks is not None else math.isqrt(n - 1) + 1
    if m > n:
        raise ConfigError(f"landmarks={m} exceeds n={n}")
    lam = resolve_lam(config.lam, n)
    idx = child_rng(config.seed, "landmarks").permutation(n)[:m]
    points = dataset.features[idx]
    knm = kernel.matrix(dataset.features, points)
    kmm = kernel.matrix(points, points)
    system = knm.T @ knm + (lam * n) * kmm
    if lam == 0.0:
        _check_not_singular(system, "nystrom")
    rhs = knm.T @ dataset.labels
    try:
        alpha = _solve_spd(system, rhs, "nystrom")
    except NumericalError:
        alpha = _eig_clip_solver(system)(rhs)
    return DualPredictor(coefficients=alpha, landmarks=points, kernel=kernel)


# ---------------------------------------------------------------------------
# predictor serialization

def predictor_to_json(predictor: Predictor) -> dict:
    if isinstance(predictor, PrimalPredictor):
        return {"form": "primal", "weights": predictor.weights.tolist()}
    return {
        "form": "dual",
        "coefficients": predictor.coefficients.tolist(),
        "landmarks": predictor.landmarks.tolist(),
        "kernel": predictor.kernel.to_json(),
    }


def predictor_from_json(obj: dict) -> Predictor:
    form = obj.get("form")
    if form == "primal":
        extra = set(obj) - {"form", "weights"}
        if extra:
            raise ConfigError(f"unknown predictor fields: {sorted(extra)}")
        return PrimalPredictor(weights=np.asarray(obj["weights"], dtype=np.float64))
    if form == "dual":
        extra = set(obj) - {"form", "coefficients", "landmarks", "kernel"}
        if extra:
            raise ConfigError(f"unknown predictor fields: {sorted(extra)}")
        return DualPredictor(
            coefficients=np.asarray(obj["coefficients"], dtype=np.float64),
            landmarks=np.asarray(obj["landmarks"], dtype=np.float64),
            kernel=Kernel.from_json(obj["kernel"]),
        )
    raise ConfigError(f"unknown predictor form {form!r}")


def save_predictor(predictor: Predictor, path) -> None:
    with open(path, "w") as fh:
        json.dump(predictor_to_json(predictor), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_predictor(path) -> Predictor:
    with open(path) as fh:
        return predictor_from_json(json.load(fh))
