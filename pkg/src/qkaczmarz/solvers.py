"""Quantile-filtered randomized sparse Kaczmarz iterations.

One engine covers the single-row method (inexact or exact dual step) and the
averaged-block method, plus every baseline obtained by switching the quantile
filter off (plain randomized / sparse Kaczmarz) or setting lambda = 0.

Row index sampling uses rejection sampling on 64-bit words from a seeded
PCG64 stream, so identical (instance, config, seed) runs reproduce traces
bit for bit on any platform.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import bregman, quantiles
from .errors import ConfigInvalid, EmptyAcceptableSet, MissingGroundTruth

METHODS = ("single-row-inexact", "single-row-exact", "averaged-block")

_ZERO_RES_TOL = 1e-13


@dataclass(frozen=True)
class SolverConfig:
    method: str = "single-row-inexact"
    lam: float = 1.0
    quantile_q: float | None = None      # None disables the quantile filter
    stepsize: float | str = 1.0          # constant w, "1.7n", or weight table
    row_weights: np.ndarray | None = None
    max_iters: int = 1000
    seed: int = 0
    trace_every: int = 1
    stop_tol: float | None = None
    check_quantile_bound: bool = False   # runtime residual-quantile inequality

    def validate(self):
        if self.method not in METHODS:
            raise ConfigInvalid(f"unknown method {self.method!r}")
        if self.lam < 0:
            raise ConfigInvalid("lambda must be nonnegative")
        if self.quantile_q is not None and not 0.0 < self.quantile_q <= 1.0:
            raise ConfigInvalid("quantile_q must lie in (0, 1]")
        if self.max_iters < 1:
            raise ConfigInvalid("max_iters must be >= 1")
        if self.trace_every < 1:
            raise ConfigInvalid("trace_every must be >= 1")
        if self.stop_tol is not None and self.stop_tol < 0:
            raise ConfigInvalid("stop_tol must be nonnegative")
        if isinstance(self.stepsize, str):
            resolve_stepsize(self.stepsize, 1)
        elif self.row_weights is None and not self.stepsize > 0:
            raise ConfigInvalid("constant stepsize must be positive")
        if self.row_weights is not None and np.any(np.asarray(self.row_weights) <= 0):
            raise ConfigInvalid("per-row weights must be positive")


def resolve_stepsize(stepsize, n):
    """Turn a stepsize policy into a constant w.

    Accepts a positive float, a numeric string, or a string like "1.7n"
    meaning coefficient times the column count.
    """
    if isinstance(stepsize, str):
        txt = stepsize.strip()
        if txt.endswith("n"):
            scale = n
            txt = txt[:-1]
            coeff_default = 1.0
        else:
            scale = 1
            coeff_default = None
        try:
            coeff = float(txt) if txt else coeff_default
        except ValueError:
            coeff = None
        if coeff is None:
            raise ConfigInvalid(f"bad stepsize spec {stepsize!r}")
        if coeff <= 0:
            raise ConfigInvalid("stepsize coefficient must be positive")
        return coeff * scale
    w = float(stepsize)
    if w <= 0:
        raise ConfigInvalid("constant stepsize must be positive")
    return w


@dataclass
class IterateState:
    x: np.ndarray
    x_star: np.ndarray
    k: int = 0
    last_quantile: float = np.nan
    last_set_size: int = 0
    converged: bool = False


@dataclass
class ConvergenceTrace:
    ks: list = field(default_factory=list)
    rel_error: list = field(default_factory=list)
    bregman_dist: list = field(default_factory=list)
    quantile: list = field(default_factory=list)
    set_size: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)

    def append(self, k, rel, dist, q, size, secs):
        self.ks.append(k)
        self.rel_error.append(rel)
        self.bregman_dist.append(dist)
        self.quantile.append(q)
        self.set_size.append(size)
        self.elapsed.append(secs)


def zero_state(n):
    return IterateState(x=np.zeros(n), x_star=np.zeros(n))


def sample_index(rng, pool):
    """Uniform element of `pool` via rejection sampling on 64-bit draws."""
    n = pool.shape[0]
    limit = (2**64 // n) * n
    while True:
        word = int(rng.integers(0, 2**64, dtype=np.uint64))
        if word < limit:
            return int(pool[word % n])


def step_single(state, instance, config, rng):
    """One single-row iteration (Algorithm-1 style), mutating nothing.

    With the quantile on: threshold at the residual q-quantile, sample
    uniformly from the acceptable set.  With it off: sample uniformly over
    all rows, skipping the residual sweep.
    """
    A, b = instance.A, instance.b_observed
    m = A.shape[0]
    if config.quantile_q is not None:
        abs_res = np.abs(A @ state.x - b)
        Q = quantiles.q_quantile(abs_res, config.quantile_q)
        pool = quantiles.acceptable_set(abs_res, Q, strict=False)
    else:
        Q = np.nan
        pool = np.arange(m)
    i = sample_index(rng, pool)
    a_i = A[i]
    if config.method == "single-row-exact":
        t = bregman.exact_step(state.x_star, a_i, b[i], config.lam)
    else:
        t = float(np.dot(a_i, state.x)) - b[i]
    x_star = state.x_star - t * a_i
    return IterateState(
        x=bregman.soft_shrink(x_star, config.lam),
        x_star=x_star,
        k=state.k + 1,
        last_quantile=Q,
        last_set_size=pool.shape[0],
    )


def step_averaged_block(state, instance, config):
    """One averaged-block iteration: weighted mean of row corrections.

    The acceptable set uses a strict comparison against the quantile; the
    all-residuals-zero case raises EmptyAcceptableSet and is reported by
    run() as convergence.
    """
    A, b = instance.A, instance.b_observed
    res = A @ state.x - b
    abs_res = np.abs(res)
    q = config.quantile_q if config.quantile_q is not None else 1.0
    Q = quantiles.q_quantile(abs_res, q)
    T = quantiles.acceptable_set(abs_res, Q, strict=True)
    eta = T.shape[0]
    if config.row_weights is not None:
        w = np.asarray(config.row_weights, dtype=float)[T]
    else:
        w = resolve_stepsize(config.stepsize, A.shape[1])
    x_star = state.x_star - (A[T].T @ (w * res[T])) / eta
    return IterateState(
        x=bregman.soft_shrink(x_star, config.lam),
        x_star=x_star,
        k=state.k + 1,
        last_quantile=Q,
        last_set_size=eta,
    )


def run(instance, config, record_bregman=True):
    """Iterate from x0 = x0* = 0; returns (final state, trace).

    Stops at max_iters, at stop_tol on the relative error (needs x_hat), or
    when the averaged-block acceptable set empties with all residuals zero
    (converged).  The trace records every trace_every-th iteration and the
    final one.
    """
    config.validate()
    A = instance.A
    x_hat = instance.x_hat
    if config.stop_tol is not None and x_hat is None:
        raise MissingGroundTruth("stop_tol needs a ground truth")
    norm_hat = float(np.linalg.norm(x_hat)) if x_hat is not None else None

    sigma_max = None
    bound_terms = None
    if config.check_quantile_bound:
        if x_hat is None:
            raise MissingGroundTruth("the quantile bound check needs a ground truth")
        sigma_max = float(np.linalg.svd(A, compute_uv=False)[0])
        bound_terms = _quantile_bound_terms(instance, config.quantile_q, sigma_max)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    state = zero_state(A.shape[1])
    trace = ConvergenceTrace()
    start = time.perf_counter()

    def record(st):
        rel = dist = None
        if x_hat is not None:
            rel = float(np.linalg.norm(st.x - x_hat)) / norm_hat
            if record_bregman:
                dist = bregman.bregman_distance(
                    st.x, st.x_star, x_hat, config.lam, validate=False
                )
        trace.append(st.k, rel, dist, st.last_quantile, st.last_set_size,
                     time.perf_counter() - start)
        return rel

    while state.k < config.max_iters:
        try:
            if config.method == "averaged-block":
                state = step_averaged_block(state, instance, config)
            else:
                state = step_single(state, instance, config, rng)
        except EmptyAcceptableSet:
            res = A @ state.x - instance.b_observed
            if np.abs(res).max(initial=0.0) <= _ZERO_RES_TOL * (1.0 + np.abs(instance.b_observed).max()):
                state.converged = True
                record(state)
                return state, trace
            raise

        if bound_terms is not None and not np.isnan(state.last_quantile):
            _assert_quantile_bound(state, x_hat, bound_terms)

        due = state.k % config.trace_every == 0 or state.k == config.max_iters
        rel = record(state) if due else None
        if config.stop_tol is not None:
            if rel is None:
                rel = float(np.linalg.norm(state.x - x_hat)) / norm_hat
            if rel <= config.stop_tol:
                state.converged = True
                if not due:
                    record(state)
                return state, trace
    return state, trace


def _quantile_bound_terms(instance, q, sigma_max):
    beta = instance.beta
    if q is None or not beta < q < 1.0 - beta:
        raise ConfigInvalid("the quantile bound needs beta < q < 1 - beta")
    m = instance.m
    lead = np.sqrt(1.0 - beta) / ((1.0 - beta - q) * np.sqrt(m)) * sigma_max
    noise = (1.0 - beta) / (1.0 - beta - q) * np.abs(instance.noise).max(initial=0.0)
    return lead, noise


def _assert_quantile_bound(state, x_hat, terms, tol=1e-9):
    lead, noise = terms
    bound = lead * float(np.linalg.norm(state.x - x_hat)) + noise + tol
    if state.last_quantile > bound:
        raise AssertionError(
            f"residual quantile {state.last_quantile} exceeds bound {bound} "
            f"at iteration {state.k}"
        )


def median_of_trials(instance_for_trial, config, trials):
    """Componentwise-median relative-error trace over seeded trials.

    Trial j runs with seed config.seed + j on instance_for_trial(j) (pass a
    constant function to reuse one instance).  stop_tol is ignored so every
    trial produces the same trace grid; an even trial count takes the mean
    of the two middle values.
    """
    if trials < 1:
        raise ConfigInvalid("trials must be >= 1")
    base = replace(config, stop_tol=None)
    traces = []
    for j in range(trials):
        inst = instance_for_trial(j)
        _, tr = run(inst, replace(base, seed=config.seed + j), record_bregman=False)
        traces.append(tr)
    out = ConvergenceTrace()
    ks = traces[0].ks
    for pos, k in enumerate(ks):
        rels = np.array([t.rel_error[pos] for t in traces], dtype=float)
        out.append(
            k,
            float(np.median(rels)),
            None,
            float(np.median([t.quantile[pos] for t in traces])),
            int(np.median([t.set_size[pos] for t in traces])),
            float(np.median([t.elapsed[pos] for t in traces])),
        )
    return out
