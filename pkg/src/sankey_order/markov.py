"""Stage 1: ordering from the second eigenvector of a level-to-level Markov chain.

Positions are pushed from the first level to the last through row-stochastic
left transitions and back through right transitions. The round trip is a
right stochastic matrix T on the first level; its second eigenvector gives
first-level positions that are then propagated to all other levels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import CrossingReport, LayeredGraph, Ordering, crossing_report, total_crossing

log = logging.getLogger(__name__)

DEGENERATE_SPREAD = 1e-9
EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    pass


class Stage1Error(RuntimeError):
    pass


@dataclass(frozen=True)
class Stage1Config:
    alpha1: float = 0.01
    repeats: int = 100
    seed: int = 0
    eig_tol: float = 1e-12
    eig_max_iter: int = 100_000
    # fresh random draws allowed per repeat when x2 is constant or the solve stalls
    max_retries: int = 10

    def __post_init__(self):
        if not 0.0 <= self.alpha1 <= 1.0:
            raise ValueError(f"alpha1 must lie in [0, 1], got {self.alpha1}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.eig_tol > 0:
            raise ValueError("eig_tol must be positive")
        if self.eig_max_iter < 1 or self.max_retries < 1:
            raise ValueError("eig_max_iter and max_retries must be >= 1")


def _normalise(m: np.ndarray, sums: np.ndarray, axis_len: int, empty: str, what: str) -> np.ndarray:
    zero = sums <= 0
    if zero.any():
        if empty == "raise":
            raise ValueError(f"zero {what} sum at {np.flatnonzero(zero).tolist()}")
        sums = np.where(zero, 1.0, sums)
    out = m / sums[:, None]
    if zero.any():
        out[zero] = 1.0 / axis_len
    return out


def left_transition(m: np.ndarray, empty: str = "raise") -> np.ndarray:
    """Row j gives the left-barycentre weights of right-hand vertex j.

    Shape is (cols, rows) of ``m``. With ``empty="uniform"`` a vertex with no
    left neighbours gets a uniform row instead of raising.
    """
    m = np.asarray(m, dtype=float)
    return _normalise(m.T, m.sum(axis=0), m.shape[0], empty, "column")


def right_transition(m: np.ndarray, empty: str = "raise") -> np.ndarray:
    """Row j gives the right-barycentre weights of left-hand vertex j."""
    m = np.asarray(m, dtype=float)
    return _normalise(m, m.sum(axis=1), m.shape[1], empty, "row")


def random_stochastic(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    s = rng.random(shape)
    return s / s.sum(axis=1, keepdims=True)


def mix_random(t: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """(1 - alpha) * t + alpha * S with S a fresh uniform row-normalised matrix."""
    s = random_stochastic(t.shape, rng)
    return (1.0 - alpha) * t + alpha * s


@dataclass
class Chain:
    left: list[np.ndarray]  # L~ factors, left[i] maps level i positions to level i+1
    right: list[np.ndarray]  # R~ factors, right[i] maps level i+1 positions to level i
    t: np.ndarray


def compose_matrices(matrices: Sequence[np.ndarray], alpha: float, rng: np.random.Generator) -> Chain:
    left, right = [], []
    for m in matrices:
        left.append(mix_random(left_transition(m, empty="uniform"), alpha, rng))
        right.append(mix_random(right_transition(m, empty="uniform"), alpha, rng))
    lprod = left[0]
    for f in left[1:]:
        lprod = f @ lprod
    rprod = right[0]
    for f in right[1:]:
        rprod = rprod @ f
    return Chain(left, right, rprod @ lprod)


def compose_chain(g: LayeredGraph, cfg: Stage1Config, rng: np.random.Generator) -> Chain:
    """T = R L over the parallel part of ``g`` (binding links are ignored)."""
    return compose_matrices(g.matrices[: g.n - 1], cfg.alpha1, rng)


@dataclass
class EigenResult:
    positions: np.ndarray  # x2 rescaled into [0, 1]
    value: float  # estimate of lambda2 (its modulus when planar)
    iterations: int
    degenerate: bool
    raw: np.ndarray = field(repr=False)
    # iterates settled in a 2-D invariant plane (complex pair or |l2| = |l3|)
    planar: bool = False


def _canonical_sign(x: np.ndarray) -> float:
    big = np.flatnonzero(np.abs(x) > 1e-8 * np.abs(x).max())
    return -1.0 if big.size and x[big[0]] < 0 else 1.0


def _rescale(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi - lo <= 0:
        return np.full_like(x, 0.5)
    return (x - lo) / (hi - lo)


def _tied_roots(z: np.ndarray, x: np.ndarray, w: np.ndarray, c: float, tol: float) -> float | None:
    """Modulus of the dominant pair if A^2 w = a A w + b w holds with tied roots.

    ``x = c A w`` and ``z = A x`` for the deflated operator A. Returns None
    unless z lies in span(x, w) and the two recurrence roots share a modulus.
    """
    basis = np.column_stack([x, w])
    coef, *_ = np.linalg.lstsq(basis, z, rcond=None)
    if np.abs(z - basis @ coef).max() > tol * max(np.abs(z).max(), 1e-300):
        return None
    a, b = coef[0], coef[1] / c
    roots = np.roots([1.0, -a, -b])
    mags = np.abs(roots)
    if np.abs(roots.imag).max() > 1e-12 * mags.max() or abs(mags[0] - mags[1]) <= 1e-9 * mags.max():
        return float(mags.max())
    return None


def second_eigenvector(
    t: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    start: np.ndarray | None = None,
) -> EigenResult:
    """Eigenvector of the second-largest-magnitude eigenvalue of stochastic ``t``.

    Power iteration on u -> T u with the constant component removed after
    every step. Since T maps constants to constants, this iterates the map T
    induces on vectors modulo constants, whose spectrum is that of T minus
    one copy of the eigenvalue 1. The vector is only determined up to an
    additive constant and scale, so it is returned rescaled into [0, 1].

    When the dominant deflated eigenvalues tie in modulus (a complex pair,
    or +l and -l) the iterates rotate inside a plane instead of settling;
    once they stay in that plane the current iterate is accepted.
    """
    t = np.asarray(t, dtype=float)
    k = t.shape[0]
    if t.shape != (k, k):
        raise ValueError(f"transition matrix must be square, got {t.shape}")
    if k == 1:
        return EigenResult(np.array([0.5]), 0.0, 0, True, np.zeros(1))
    if start is None:
        start = np.random.default_rng(0).standard_normal(k)
    x = np.asarray(start, dtype=float) - np.mean(start)
    if np.abs(x).max() == 0:
        x = np.arange(k, dtype=float) - (k - 1) / 2
    x = x / np.abs(x).max()
    x = x * _canonical_sign(x)
    prev, c_prev = None, 1.0
    value, planar, diff = 0.0, False, np.inf
    for it in range(1, max_iter + 1):
        z = t @ x
        z -= z.mean()
        scale = np.abs(z).max()
        if scale < 1e-300:
            # T collapses everything onto constants: x2 is the constant vector
            return EigenResult(np.full(k, 0.5), 0.0, it, True, np.zeros(k))
        value = float(z @ x / (x @ x))
        sgn = _canonical_sign(z)
        y = z * (sgn / scale)
        diff = np.abs(y - x).max()
        # rounding in T @ x is ~eps relative to |T| = 1, i.e. eps/|l2| relative to the iterate
        if diff < max(tol, 64 * EPS / max(abs(value), 1e-300)):
            x = y
            break
        if prev is not None and it % 10 == 0 and k > 2:
            mod = _tied_roots(z, x, prev, c_prev, tol)
            if mod is not None:
                x, value, planar = y, mod, True
                break
        prev, c_prev, x = x, sgn / scale, y
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps (last change {diff:.3e})")
    degenerate = planar or abs(value - 1.0) < 1e-9
    return EigenResult(_rescale(x), value, it, degenerate, x, planar)


def propagate(u1: np.ndarray, left_factors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Positions for every level: u(i+1) = L~(i) u(i)."""
    out = [np.asarray(u1, dtype=float)]
    for f in left_factors:
        out.append(f @ out[-1])
    return out


def order_by_position(u: np.ndarray, current: np.ndarray | None = None) -> np.ndarray:
    """Vertex indices by descending position; ties keep their current rank."""
    if current is None:
        current = np.arange(len(u))
    current = np.asarray(current, dtype=np.intp)
    return current[np.argsort(-u[current], kind="stable")]


def segments(sizes: Sequence[int]) -> list[tuple[int, int]]:
    """Maximal runs [a, b] of consecutive levels holding 2+ vertices, with b > a.

    A single-vertex level has no crossings on either side, so runs separated
    by one are independent subproblems.
    """
    out, start = [], None
    for i, s in enumerate(list(sizes) + [1]):
        if s >= 2 and start is None:
            start = i
        elif s < 2 and start is not None:
            if i - 1 > start:
                out.append((start, i - 1))
            start = None
    return out


@dataclass
class Stage1Result:
    ordering: Ordering
    report: CrossingReport
    best_repeat: int
    crossings: list[float]  # weighted crossing per repeat, nan for failed repeats
    perms: list[np.ndarray] = field(repr=False)


def single_run(g: LayeredGraph, cfg: Stage1Config, rng: np.random.Generator) -> list[np.ndarray] | None:
    """One Markov chain repeat; None if no usable x2 was found within the retry budget."""
    perms = [np.arange(s) for s in g.sizes]
    for a, b in segments(g.sizes):
        mats = g.matrices[a:b]
        for _ in range(cfg.max_retries):
            chain = compose_matrices(mats, cfg.alpha1, rng)
            start = rng.standard_normal(g.sizes[a])
            try:
                eig = second_eigenvector(chain.t, cfg.eig_tol, cfg.eig_max_iter, start=start)
            except ConvergenceError as exc:
                log.debug("levels %d-%d: %s; redrawing", a + 1, b + 1, exc)
                continue
            if np.ptp(eig.raw) < DEGENERATE_SPREAD:
                continue
            for off, u in enumerate(propagate(eig.positions, chain.left)):
                perms[a + off] = order_by_position(u)
            break
        else:
            return None
    return perms


def run_stage1(g: LayeredGraph, cfg: Stage1Config = Stage1Config()) -> Stage1Result:
    """Best-in-N Markov chain ordering of ``g``.

    Binding links are ignored both when solving and when picking the best
    repeat; the returned report scores the full graph.

    Repeat k draws from its own child of ``SeedSequence(cfg.seed)``, so the
    first N repeats are the same whatever ``cfg.repeats`` is.
    """
    parallel = g.parallel()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.repeats)
    best, best_k, best_x = None, -1, np.inf
    crossings = []
    for k, child in enumerate(children):
        perms = single_run(parallel, cfg, np.random.default_rng(child))
        if perms is None:
            crossings.append(float("nan"))
            continue
        x = total_crossing(parallel, perms)
        crossings.append(x)
        if x < best_x:
            best, best_k, best_x = perms, k, x
    if best is None:
        raise Stage1Error(f"all {cfg.repeats} repeats were degenerate or failed to converge")
    return Stage1Result(g.ordering_from_perms(best), crossing_report(g, best), best_k, crossings, best)
