"""Synthetic regression problems with analytically known Bayes risk.

A problem is a linear target ``y = w*.x + noise`` with Gaussian label noise,
so the Bayes risk equals the noise variance exactly and excess risk can be
measured against ground truth. Inputs are bounded by construction: either
uniform on the unit sphere (norm exactly 1) or standard Gaussian clipped to
radius ``3 * sqrt(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import child_rng

INPUT_LAWS = ("unit_sphere_uniform", "gaussian_clipped")

GAUSSIAN_CLIP_FACTOR = 3.0


@dataclass(frozen=True, eq=False)
class SyntheticProblem:
    """Known data distribution: linear target plus Gaussian label noise.

    ``bayes_risk`` is ``noise_std ** 2`` by construction; the target itself
    achieves it, so the hypothesis class of linear functions has no
    irreducible deficit.
    """

    dimension: int
    target_weights: np.ndarray
    noise_std: float
    input_law: str = "unit_sphere_uniform"

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}")
        if not np.isfinite(self.noise_std) or self.noise_std < 0:
            raise ConfigError(f"noise_std must be a nonnegative real, got {self.noise_std}")
        if self.input_law not in INPUT_LAWS:
            raise ConfigError(f"unknown input_law {self.input_law!r}, expected one of {INPUT_LAWS}")
        w = np.asarray(self.target_weights, dtype=np.float64)
        if w.shape != (self.dimension,):
            raise ConfigError(
                f"target_weights shape {w.shape} does not match dimension {self.dimension}"
            )
        if not np.all(np.isfinite(w)):
            raise ConfigError("target_weights must be finite")
        if np.linalg.norm(w) == 0.0:
            raise ConfigError("target_weights must be nonzero")
        w.flags.writeable = False
        object.__setattr__(self, "target_weights", w)

    @property
    def bayes_risk(self) -> float:
        return float(self.noise_std**2)

    @property
    def input_radius(self) -> float:
        """Upper bound on the norm of every sampled input."""
        if self.input_law == "unit_sphere_uniform":
            return 1.0
        return GAUSSIAN_CLIP_FACTOR * float(np.sqrt(self.dimension))


@dataclass(frozen=True, eq=False)
class Dataset:
    """An i.i.d. sample: feature matrix (n, d), labels (n,)."""

    features: np.ndarray
    labels: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ConfigError(f"features must be a (n >= 1, d) matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ConfigError(f"labels shape {y.shape} does not match {x.shape[0]} samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ConfigError("dataset entries must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]


def make_problem(
    dimension: int,
    noise_std: float,
    input_law: str = "unit_sphere_uniform",
    seed: int = 0,
) -> SyntheticProblem:
    """Draw target weights uniformly on the unit sphere (seeded)."""
    if dimension < 1:
        raise ConfigError(f"dimension must be >= 1, got {dimension}")
    rng = child_rng(seed, "target")
    w = _unit_vector(rng, dimension)
    return SyntheticProblem(
        dimension=dimension, target_weights=w, noise_std=float(noise_std), input_law=input_law
    )


def bayes_risk(problem: SyntheticProblem) -> float:
    """Minimum achievable expected risk under squared loss: noise variance."""
    return problem.bayes_risk


def _unit_vector(rng: np.random.Generator, dimension: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(dimension)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def _sample_inputs(problem: SyntheticProblem, n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((n, problem.dimension))
    if problem.input_law == "unit_sphere_uniform":
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        # A zero draw has probability zero; guard against it anyway.
        norms[norms < 1e-12] = 1.0
        return x / norms
    radius = problem.input_radius
    norms = np.linalg.norm(x, axis=1)
    over = norms > radius
    if np.any(over):
        x[over] *= (radius / norms[over])[:, None]
    return x


def sample_dataset(problem: SyntheticProblem, n: int, seed: int = 0) -> Dataset:
    """n i.i.d. samples; bit-identical for a fixed (problem, n, seed)."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = child_rng(seed, "dataset")
    x = _sample_inputs(problem, n, rng)
    clean = x @ problem.target_weights
    if problem.noise_std > 0:
        labels = clean + problem.noise_std * rng.standard_normal(n)
    else:
        labels = clean
    return Dataset(features=x, labels=labels, seed=seed)


# ---------------------------------------------------------------------------
# CSV import/export: header "x0,...,x{d-1},y", one sample per row.

def write_dataset_csv(dataset: Dataset, path) -> None:
    d = dataset.dimension
    header = ",".join([f"x{j}" for j in range(d)] + ["y"])
    lines = [header]
    for i in range(dataset.n_samples):
        row = [f"{v:.17g}" for v in dataset.features[i]]
        row.append(f"{dataset.labels[i]:.17g}")
        lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_dataset_csv(path) -> Dataset:
    with open(path) as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if len(cols) < 2 or cols[-1] != "y" or cols[:-1] != [f"x{j}" for j in range(len(cols) - 1)]:
            raise ConfigError(f"{path}: expected header 'x0,...,x{{d-1}},y', got {header!r}")
        d = len(cols) - 1
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != d + 1:
                raise ConfigError(f"{path}:{lineno}: expected {d + 1} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    return Dataset(features=arr[:, :d], labels=arr[:, d], seed=None)
