"""Synthetic and file-based problem instances.

An instance bundles a row-normalized matrix A, the clean right-hand side
b_clean = A x_hat, sparse corruption b_corrupt, dense bounded noise, and the
observed b = b_clean + b_corrupt + noise.  Generation is fully determined by
the seed; random draws always happen in the fixed order: matrix entries,
support, support values, corruption indices, corruption values, noise.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import matrices
from .errors import DimensionMismatch, SpecInvalid


@dataclass(frozen=True)
class GeneratorSpec:
    m: int
    n: int
    sparsity: int
    beta: float = 0.0
    corruption_scale: float = 0.0
    noise_bound: float = 0.0
    seed: int = 0

    def validate(self):
        if self.m < 1 or self.n < 1:
            raise SpecInvalid("m and n must be positive")
        if not 0 <= self.sparsity <= self.n:
            raise SpecInvalid("sparsity must lie in [0, n]")
        if not 0.0 <= self.beta < 1.0:
            raise SpecInvalid("beta must lie in [0, 1)")
        if self.corruption_scale < 0 or self.noise_bound < 0:
            raise SpecInvalid("scales must be nonnegative")


@dataclass(frozen=True)
class ProblemInstance:
    A: np.ndarray                    # unit rows
    b_clean: np.ndarray
    b_corrupt: np.ndarray
    noise: np.ndarray
    b_observed: np.ndarray
    x_hat: np.ndarray | None
    beta: float
    corruption_scale: float
    noise_bound: float
    seed: int
    corruption_indices: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def generate_gaussian(spec):
    """Gaussian model: i.i.d. N(0,1) entries, rows normalized afterwards.

    The ground truth has `sparsity` standard-normal nonzeros on a uniform
    random support; corruption adds U(-k, k) values on round(beta*m) rows
    picked without replacement; noise is U(-noise_bound, noise_bound) on
    every entry.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    A_raw = rng.standard_normal((spec.m, spec.n))
    A, _ = matrices.normalize_rows(A_raw)
    support = np.sort(rng.choice(spec.n, size=spec.sparsity, replace=False))
    x_hat = np.zeros(spec.n)
    x_hat[support] = rng.standard_normal(spec.sparsity)
    b_clean = A @ x_hat
    return _corrupt_and_pack(A, b_clean, x_hat, spec.beta, spec.corruption_scale,
                             spec.noise_bound, spec.seed, rng)


def _corrupt_and_pack(A, b_clean, x_hat, beta, k, noise_bound, seed, rng):
    m = A.shape[0]
    n_corrupt = int(round(beta * m))
    corrupt_idx = np.sort(rng.choice(m, size=n_corrupt, replace=False))
    b_corrupt = np.zeros(m)
    b_corrupt[corrupt_idx] = rng.uniform(-k, k, size=n_corrupt)
    noise = rng.uniform(-noise_bound, noise_bound, size=m)
    return ProblemInstance(
        A=A,
        b_clean=b_clean,
        b_corrupt=b_corrupt,
        noise=noise,
        b_observed=b_clean + b_corrupt + noise,
        x_hat=x_hat,
        beta=beta,
        corruption_scale=k,
        noise_bound=noise_bound,
        seed=seed,
        corruption_indices=corrupt_idx,
    )


def from_files(matrix_path, x_hat_path=None, rhs_path=None, beta=0.0,
               corruption_scale=0.0, noise_bound=0.0, seed=0):
    """Build an instance from Matrix Market files.

    Either a ground truth (x_hat_path, from which b_clean = A_norm @ x_hat)
    or a raw right-hand side (rhs_path, rescaled by the row norms) must be
    given.  Corruption and noise are injected exactly as in the Gaussian
    generator, drawing from PCG64(seed).
    """
    A_raw = matrices.mm_read(matrix_path)
    if A_raw.ndim != 2:
        raise DimensionMismatch("matrix file does not hold a 2-D matrix")
    A, scales = matrices.normalize_rows(A_raw)
    if (x_hat_path is None) == (rhs_path is None):
        raise SpecInvalid("exactly one of x_hat_path / rhs_path is required")
    if x_hat_path is not None:
        x_hat = matrices.mm_read(x_hat_path)
        if x_hat.shape[0] != A.shape[1]:
            raise DimensionMismatch("ground truth length does not match columns")
        b_clean = A @ x_hat
    else:
        x_hat = None
        b = matrices.mm_read(rhs_path)
        if b.shape[0] != A.shape[0]:
            raise DimensionMismatch("right-hand side length does not match rows")
        b_clean = b / scales
    rng = np.random.Generator(np.random.PCG64(seed))
    return _corrupt_and_pack(A, b_clean, x_hat, beta, corruption_scale,
                             noise_bound, seed, rng)


def corruption_mask(instance):
    """Indices of the corrupted rows."""
    return np.asarray(instance.corruption_indices, dtype=int)


def is_detected(instance, acceptable):
    """(corrupted-in-set, clean-in-set) counts for an acceptable index set."""
    acceptable = np.asarray(acceptable, dtype=int)
    mask = set(corruption_mask(instance).tolist())
    corrupted = sum(1 for i in acceptable.tolist() if i in mask)
    return corrupted, acceptable.size - corrupted


# ---------------------------------------------------------------------------
# On-disk bundles: a directory of Matrix Market files plus meta.txt.
# ---------------------------------------------------------------------------

_BUNDLE_FILES = {
    "A": "A.mtx",
    "b_clean": "bclean.mtx",
    "b_corrupt": "bcorrupt.mtx",
    "noise": "noise.mtx",
    "b_observed": "b.mtx",
}


def save_bundle(instance, out_dir):
    """Write an instance as Matrix Market files plus a key=value meta.txt."""
    os.makedirs(out_dir, exist_ok=True)
    for attr, fname in _BUNDLE_FILES.items():
        matrices.mm_write(os.path.join(out_dir, fname), getattr(instance, attr))
    if instance.x_hat is not None:
        matrices.mm_write(os.path.join(out_dir, "xhat.mtx"), instance.x_hat)
    meta = {
        "beta": "%.17g" % instance.beta,
        "corruption_scale": "%.17g" % instance.corruption_scale,
        "noise_bound": "%.17g" % instance.noise_bound,
        "seed": str(instance.seed),
        "corruption_indices": ",".join(str(i) for i in instance.corruption_indices),
    }
    with open(os.path.join(out_dir, "meta.txt"), "w") as fh:
        for key, val in meta.items():
            fh.write(f"{key}={val}\n")


def load_bundle(in_dir):
    """Inverse of save_bundle; reproduces b_observed exactly."""
    parts = {
        attr: matrices.mm_read(os.path.join(in_dir, fname))
        for attr, fname in _BUNDLE_FILES.items()
    }
    xhat_path = os.path.join(in_dir, "xhat.mtx")
    x_hat = matrices.mm_read(xhat_path) if os.path.exists(xhat_path) else None
    meta = {}
    with open(os.path.join(in_dir, "meta.txt")) as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, val = line.partition("=")
                meta[key] = val
    idx_txt = meta.get("corruption_indices", "")
    corrupt_idx = (
        np.array([int(t) for t in idx_txt.split(",")], dtype=int)
        if idx_txt
        else np.array([], dtype=int)
    )
    return ProblemInstance(
        A=parts["A"],
        b_clean=parts["b_clean"],
        b_corrupt=parts["b_corrupt"],
        noise=parts["noise"],
        b_observed=parts["b_observed"],
        x_hat=x_hat,
        beta=float(meta.get("beta", 0.0)),
        corruption_scale=float(meta.get("corruption_scale", 0.0)),
        noise_bound=float(meta.get("noise_bound", 0.0)),
        seed=int(meta.get("seed", 0)),
        corruption_indices=corrupt_idx,
    )
