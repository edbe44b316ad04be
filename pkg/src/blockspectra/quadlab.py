"""Block-diagonal quadratic benchmarks for single- vs coordinate-wise step sizes.

The lab minimizes L(w) = 0.5 w'Hw - h'w with H block diagonal and positive
definite.  Three iterations are provided:

- ``gd``: plain gradient descent, one global step size.
- ``adam_fixed``: gradient descent preconditioned by the fixed diagonal
  D = diag(|grad L(w0)|), i.e. momentum-free Adam whose second-moment
  accumulator never moves (beta2 = 1, epsilon = 0).
- ``adam_ema``: the same update with an exponentially averaged second moment
  (beta2 < 1), which cycles instead of converging at constant step size.

Alongside the runs, ``theory_report`` computes the blockwise contraction
constants that predict when the preconditioned iteration beats plain
gradient descent, and ``verify_bounds`` checks the predicted per-step
contractions against measured trajectories.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from blockspectra.operators import (
    BlockPartition,
    DenseSymmetric,
    SymmetricOperator,
    block_diagonal,
    condition_number,
    exact_eigenvalues,
    load_spectrum_csv,
)
from blockspectra.rng import TAG_CASE, TAG_INIT, derive_rng

DIVERGENCE_RATIO = 1e12
RATIO_FLOOR = 1e-250
KINDS = ("gd", "adam_fixed", "adam_ema")

# Wide spectra push loss ratios through ~300 orders of magnitude, so the
# shipped cases pin their eigenvalues inside [1, 5000].
CASE_RANGE = (1.0, 5000.0)

CASE3_SPECTRA = ((1.0, 2.0, 3.0), (99.0, 100.0, 101.0), (4998.0, 4999.0, 5000.0))
CASE4_SPECTRA = ((1.0, 99.0, 4998.0), (2.0, 100.0, 4999.0), (3.0, 101.0, 5000.0))


class AllDivergedError(RuntimeError):
    """Every run in a step-size search diverged."""


class QuadraticProblem:
    """Strongly convex quadratic with a block-diagonal Hessian.

    Caches the dense Hessian, the minimizer, per-block and composite
    eigenvalues (descending), and the corresponding condition numbers.
    """

    def __init__(self, blocks, h=None):
        mats = []
        for b in blocks:
            if isinstance(b, DenseSymmetric):
                mats.append(b.matrix)
            else:
                mats.append(DenseSymmetric(np.asarray(b, dtype=float)).matrix)
        if not mats:
            raise ValueError("problem needs at least one block")
        self.partition = BlockPartition([m.shape[0] for m in mats])
        self.blocks = tuple(mats)
        d = self.partition.dim
        if h is None:
            h = np.zeros(d)
        self.h = np.asarray(h, dtype=float)
        if self.h.shape != (d,):
            raise ValueError(f"h has shape {self.h.shape}, expected ({d},)")

        self.matrix = np.zeros((d, d))
        for m, (a, z) in zip(self.blocks, self.partition.ranges()):
            self.matrix[a:z, a:z] = m
        self.block_eigenvalues = tuple(exact_eigenvalues(m) for m in self.blocks)
        for i, eigs in enumerate(self.block_eigenvalues):
            if eigs[-1] <= 0:
                raise ValueError(
                    f"block {i} is not positive definite (min eigenvalue {eigs[-1]})"
                )
        self.eigenvalues = np.sort(np.concatenate(self.block_eigenvalues))[::-1]
        self.kappa = condition_number(self.eigenvalues)
        self.block_kappas = tuple(condition_number(e) for e in self.block_eigenvalues)
        self.minimizer = np.concatenate(
            [
                np.linalg.solve(m, hl)
                for m, hl in zip(self.blocks, self.partition.split(self.h))
            ]
        )
        self.optimum = self.loss(self.minimizer)

    @property
    def dim(self) -> int:
        return self.partition.dim

    def loss(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ (self.matrix @ w) - self.h @ w)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(w, dtype=float) - self.h

    def gap(self, w: np.ndarray) -> float:
        """L(w) - L*, evaluated without cancellation via the minimizer."""
        diff = np.asarray(w, dtype=float) - self.minimizer
        return float(0.5 * diff @ (self.matrix @ diff))

    def operator(self) -> SymmetricOperator:
        return block_diagonal([DenseSymmetric(m) for m in self.blocks])

    def scaled(self, c: float) -> "QuadraticProblem":
        """The problem (c H, c h) for a positive constant c."""
        if c <= 0:
            raise ValueError(f"scale must be positive, got {c}")
        return QuadraticProblem([c * m for m in self.blocks], c * self.h)


@dataclass(frozen=True)
class OptimizerConfig:
    """Which iteration to run and with what constants.

    ``beta2`` is 1 for the frozen-preconditioner variant and must be in
    [0, 1) for the exponentially averaged one; momentum and epsilon are
    structurally zero in this lab.
    """

    kind: str
    eta: float
    beta2: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not (self.eta > 0):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.kind == "adam_fixed" and self.beta2 != 1.0:
            raise ValueError("adam_fixed requires beta2 = 1")
        if self.kind == "adam_ema" and not (0.0 <= self.beta2 < 1.0):
            raise ValueError(f"adam_ema requires beta2 in [0, 1), got {self.beta2}")


@dataclass
class Trajectory:
    """One optimizer run: normalized loss curve plus sparse iterate snapshots.

    ``loss_ratios[t]`` is (L(w_t) - L*) / (L(w_0) - L*); entry 0 is exactly 1.
    ``snapshots`` holds (t, w_t) pairs for the first 50 iterations, every
    ``stride`` iterations, and the last 50 recorded iterations.
    """

    kind: str
    eta: float
    beta2: float
    loss_ratios: np.ndarray
    status: str
    iterations: int
    initial_gap: float
    w0: np.ndarray
    snapshots: list = field(default_factory=list)
    diagnostics: tuple = ()
    problem: QuadraticProblem | None = field(default=None, repr=False)

    def final_ratio(self) -> float:
        return float(self.loss_ratios[-1])


def gaussian_init(dim: int, seed: int, index: int = 0) -> np.ndarray:
    """Standard normal initial point from the (seed, index) stream."""
    return derive_rng(seed, TAG_INIT, index).standard_normal(dim)


def _orthogonal_from_gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    # Fix the sign convention so the factor is unique given the stream.
    return q * np.sign(np.diag(r))


def _rotated_block(rng, eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    q = _orthogonal_from_gaussian(rng, lam.size)
    m = (q * lam) @ q.T
    return 0.5 * (m + m.T)


def make_case(case_id: int, seed: int = 0, spectrum_files=None, block_dim: int = 25) -> QuadraticProblem:
    """One of the four shipped benchmark Hessians, with h = 0.

    Cases 3 and 4 are self-contained 9-dimensional problems built from the
    same nine eigenvalues {1,2,3, 99,100,101, 4998,4999,5000}; case 3 groups
    them by magnitude (strongly heterogeneous blocks), case 4 spreads each
    magnitude across all blocks (near-identical blocks).  Cases 1 and 2 draw
    ``block_dim`` eigenvalues per block from user-supplied spectrum CSV files
    and affinely map the union onto [1, 5000].  Every block is conjugated by
    a seeded random orthogonal factor so nothing is axis-aligned.
    """
    if case_id in (3, 4):
        spectra = CASE3_SPECTRA if case_id == 3 else CASE4_SPECTRA
    elif case_id in (1, 2):
        if not spectrum_files:
            raise ValueError(
                f"case {case_id} needs one eigenvalue CSV per block (spectrum_files)"
            )
        pools = [load_spectrum_csv(p) for p in spectrum_files]
        for i, pool in enumerate(pools):
            if pool.size < block_dim:
                raise ValueError(
                    f"spectrum file {spectrum_files[i]} has {pool.size} values, "
                    f"need at least {block_dim}"
                )
        sampled = []
        for i, pool in enumerate(pools):
            rng = derive_rng(seed, TAG_CASE, case_id, i)
            sampled.append(rng.choice(pool, size=block_dim, replace=False))
        lo = min(float(s.min()) for s in sampled)
        hi = max(float(s.max()) for s in sampled)
        if hi <= lo:
            raise ValueError("degenerate spectrum files: all eigenvalues equal")
        a, b = CASE_RANGE
        spectra = tuple(a + (s - lo) * (b - a) / (hi - lo) for s in sampled)
    else:
        raise ValueError(f"case_id must be 1, 2, 3 or 4, got {case_id}")

    blocks = []
    for l, lam in enumerate(spectra):
        rng = derive_rng(seed, TAG_CASE, case_id, l)
        blocks.append(_rotated_block(rng, lam))
    return QuadraticProblem(blocks)


def make_hard_instance() -> tuple[QuadraticProblem, np.ndarray]:
    """Two-eigenvalue diagonal instance plus an equal-energy initial point.

    H = diag(1, 5000), h = 0, and w0 puts the same initial loss in both
    eigendirections.  On this instance no constant step size can beat the
    per-direction contraction floor 1 - 2/(kappa + 1).
    """
    problem = QuadraticProblem([[[1.0]], [[5000.0]]])
    w0 = np.array([1.0, 1.0 / np.sqrt(5000.0)])
    return problem, w0


def scalar_problem(curvature: float = 1.0) -> QuadraticProblem:
    """L(w) = 0.5 * curvature * w^2 in one dimension."""
    return QuadraticProblem([[[float(curvature)]]])


def default_gd_eta(problem: QuadraticProblem) -> float:
    """2 / (lambda_max + lambda_min), the optimal constant step."""
    return 2.0 / (problem.eigenvalues[0] + problem.eigenvalues[-1])


def default_eta_grid(points: int = 25) -> np.ndarray:
    return np.logspace(-6, 0, points)


# ---------------------------------------------------------------------------
# Batched run engine.  Rows are independent runs sharing one problem; results
# are bit-identical however many rows run together because each row's updates
# touch only its own slice.
# ---------------------------------------------------------------------------

_LIVE, _CONVERGED, _MAXITERS, _DIVERGED = 0, 1, 2, 3
_STATUS_NAMES = {_CONVERGED: "converged", _MAXITERS: "max_iters", _DIVERGED: "diverged"}


class _SnapshotRecorder:
    def __init__(self, first: int = 50, stride: int = 100, last: int = 50):
        self.first = first
        self.stride = stride
        self.head: list = []
        self.tail: deque = deque(maxlen=last)

    def record(self, t: int, w: np.ndarray):
        if t < self.first or (self.stride and t % self.stride == 0):
            self.head.append((t, w.copy()))
        self.tail.append((t, w.copy()))

    def merge(self) -> list:
        seen = {t: w for t, w in self.head}
        for t, w in self.tail:
            seen.setdefault(t, w)
        return [(t, seen[t]) for t in sorted(seen)]


def _run_batch(
    problem: QuadraticProblem,
    W0: np.ndarray,
    etas: np.ndarray,
    kind: str,
    beta2: float,
    max_iters: int,
    target: float | None,
    snapshot_stride: int = 100,
):
    """Run len(etas) independent iterations of one kind on a shared problem."""
    H = problem.matrix
    h = problem.h
    wstar = problem.minimizer
    resid = H @ wstar - h  # ~0; kept so gaps stay exact for h != 0
    n, d = W0.shape
    W = W0.astype(float).copy()

    gap0 = 0.5 * np.einsum("nd,nd->n", W - wstar, (W - wstar) @ H)
    if np.any(gap0 <= 0):
        bad = int(np.argmin(gap0))
        raise ValueError(f"initial point {bad} already sits at the minimizer")

    dinv = None
    if kind == "adam_fixed":
        G0 = W @ H - h
        if np.any(G0 == 0):
            row, col = np.argwhere(G0 == 0)[0]
            raise ValueError(
                f"initial gradient coordinate {int(col)} is zero (run {int(row)}); "
                "the fixed preconditioner would divide by zero"
            )
        dinv = 1.0 / np.abs(G0)

    V = None  # second-moment accumulator for adam_ema
    status = np.full(n, _LIVE, dtype=int)
    ratios = np.full((n, max_iters + 1), np.nan)
    iters = np.zeros(n, dtype=int)
    diag_counts = np.zeros(n, dtype=int)
    recorder = _SnapshotRecorder(stride=snapshot_stride) if n == 1 else None

    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(max_iters + 1):
            G = W @ H - h
            diff = W - wstar
            gap = 0.5 * np.einsum("nd,nd->n", diff, G - resid)
            ratio = gap / gap0

            live = status == _LIVE
            if recorder is not None and live[0]:
                recorder.record(t, W[0])
            nonfinite = live & ~np.isfinite(ratio)
            status[nonfinite] = _DIVERGED
            iters[nonfinite] = t - 1
            W[nonfinite] = wstar  # freeze so later batched updates stay finite
            live = status == _LIVE
            ratios[live, t] = ratio[live]
            if target is not None:
                converged = live & (ratio <= target)
                status[converged] = _CONVERGED
                iters[converged] = t
                live = status == _LIVE
            blown = live & (ratio > DIVERGENCE_RATIO)
            status[blown] = _DIVERGED
            iters[blown] = t
            W[blown] = wstar
            live = status == _LIVE
            if t == max_iters:
                status[live] = _MAXITERS
                iters[live] = t
                break
            if not live.any():
                break

            if kind == "gd":
                step = G
            elif kind == "adam_fixed":
                step = G * dinv
            else:
                if V is None:
                    V = G * G
                else:
                    V = beta2 * V + (1.0 - beta2) * (G * G)
                D = np.sqrt(V)
                zero = D == 0
                if zero.any():
                    diag_counts[live] += zero[live].sum(axis=1)
                    step = np.where(zero, 0.0, G / np.where(zero, 1.0, D))
                else:
                    step = G / D
            W -= etas[:, None] * step

    trajectories = []
    for i in range(n):
        row = ratios[i]
        valid = np.where(np.isfinite(row))[0]
        series = row[: valid[-1] + 1] if valid.size else np.array([1.0])
        diagnostics = ()
        if diag_counts[i]:
            diagnostics = (
                f"skipped {int(diag_counts[i])} coordinate updates with zero preconditioner",
            )
        trajectories.append(
            Trajectory(
                kind=kind,
                eta=float(etas[i]),
                beta2=float(beta2),
                loss_ratios=series,
                status=_STATUS_NAMES[status[i]],
                iterations=int(iters[i]),
                initial_gap=float(gap0[i]),
                w0=W0[i].copy(),
                snapshots=recorder.merge() if (recorder is not None and i == 0) else [],
                diagnostics=diagnostics,
                problem=problem,
            )
        )
    return trajectories


def _single_run(problem, w0, eta, kind, beta2, max_iters, target, snapshot_stride=100) -> Trajectory:
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (problem.dim,):
        raise ValueError(f"w0 has shape {w0.shape}, expected ({problem.dim},)")
    if not (eta > 0):
        raise ValueError(f"eta must be positive, got {eta}")
    return _run_batch(
        problem, w0[None, :], np.array([float(eta)]), kind, beta2,
        int(max_iters), target, snapshot_stride,
    )[0]


def gd_run(problem, w0, eta=None, max_iters=100_000, target=1e-8, snapshot_stride=100) -> Trajectory:
    """Gradient descent w <- w - eta (Hw - h); eta defaults to 2/(l1 + ld)."""
    if eta is None:
        eta = default_gd_eta(problem)
    return _single_run(problem, w0, eta, "gd", 1.0, max_iters, target, snapshot_stride)


def adam_fixed_run(problem, w0, eta, max_iters=100_000, target=1e-8, snapshot_stride=100) -> Trajectory:
    """Preconditioned descent with the frozen diagonal D = diag(|grad L(w0)|)."""
    return _single_run(problem, w0, eta, "adam_fixed", 1.0, max_iters, target, snapshot_stride)


def adam_ema_run(problem, w0, eta, beta2, max_iters=100_000, target=None, snapshot_stride=100) -> Trajectory:
    """Coordinate-wise descent with an exponentially averaged second moment.

    The accumulator is v_0 = g_0 * g_0 and v_t = beta2 v_{t-1} +
    (1 - beta2) g_t * g_t, and each update divides by sqrt(v_t).  With a
    constant step the iterates settle into a cycle around the minimizer, so
    there is no convergence target by default.
    """
    if not (0.0 <= beta2 < 1.0):
        raise ValueError(f"beta2 must be in [0, 1), got {beta2}")
    return _single_run(problem, w0, eta, "adam_ema", beta2, max_iters, target, snapshot_stride)


@dataclass
class GridSearchResult:
    kind: str
    etas: np.ndarray
    trajectories: list
    best_index: int

    @property
    def best(self) -> Trajectory:
        return self.trajectories[self.best_index]

    @property
    def best_eta(self) -> float:
        return float(self.etas[self.best_index])


def grid_search(
    problem,
    kind: str,
    etas,
    w0,
    budget: int = 100_000,
    target: float = 1e-6,
    beta2: float = 0.99,
) -> GridSearchResult:
    """Run one optimizer across a step-size grid from a shared initial point.

    The best run converges to the target in the fewest iterations (ties go
    to the smaller step size).  If nothing converges, the best run is the
    non-diverged one with the lowest final loss ratio; if everything
    diverges, AllDivergedError is raised.  All runs are retained.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    etas = np.asarray(list(etas), dtype=float)
    if etas.size == 0:
        raise ValueError("eta grid is empty")
    if np.any(etas <= 0):
        raise ValueError("eta grid must be positive")
    w0 = np.asarray(w0, dtype=float)
    W0 = np.tile(w0, (etas.size, 1))
    b2 = beta2 if kind == "adam_ema" else 1.0
    trajectories = _run_batch(problem, W0, etas, kind, b2, int(budget), target)

    converged = [
        (tr.iterations, tr.eta, i)
        for i, tr in enumerate(trajectories)
        if tr.status == "converged"
    ]
    if converged:
        best_index = min(converged)[2]
    else:
        finished = [
            (tr.final_ratio(), tr.eta, i)
            for i, tr in enumerate(trajectories)
            if tr.status != "diverged"
        ]
        if not finished:
            raise AllDivergedError(
                f"all {etas.size} runs diverged for kind={kind!r}"
            )
        best_index = min(finished)[2]
    return GridSearchResult(kind=kind, etas=etas, trajectories=trajectories, best_index=best_index)


# ---------------------------------------------------------------------------
# Theory constants and bound verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryReport:
    """Blockwise contraction constants for a problem and an initial point.

    For block l with top eigenvalue lambda_{l,1}, c1[l] and c2[l] are the
    min and max of |initial gradient| / lambda_{l,1} over the block's
    coordinates; r = max c2^2 / min c1^2.  ``eta_theory`` = min_l c1[l] is the
    step size under which the preconditioned iteration provably contracts by
    ``adam_factor`` = max_l (1 - 1/(r kappa_l)) per step, while plain
    gradient descent cannot beat ``gd_factor`` = 1 - 2/(kappa + 1) per step
    on the worst instance.
    """

    kappa: float
    block_kappas: tuple
    c1: tuple
    c2: tuple
    r: float
    eta_theory: float
    gd_factor: float
    adam_factor: float
    adam_block_kappas: tuple


def theory_report(problem: QuadraticProblem, w0) -> TheoryReport:
    w0 = np.asarray(w0, dtype=float)
    g0 = problem.gradient(w0)
    if np.any(g0 == 0):
        coord = int(np.flatnonzero(g0 == 0)[0])
        raise ValueError(f"initial gradient coordinate {coord} is exactly zero")
    c1, c2 = [], []
    for eigs, g_block in zip(problem.block_eigenvalues, problem.partition.split(g0)):
        top = eigs[0]
        mags = np.abs(g_block)
        c1.append(float(mags.min() / top))
        c2.append(float(mags.max() / top))
    r = max(c2) ** 2 / min(c1) ** 2
    adam_block_kappas = tuple(r * k for k in problem.block_kappas)
    return TheoryReport(
        kappa=problem.kappa,
        block_kappas=problem.block_kappas,
        c1=tuple(c1),
        c2=tuple(c2),
        r=float(r),
        eta_theory=float(min(c1)),
        gd_factor=float(1.0 - 2.0 / (problem.kappa + 1.0)),
        adam_factor=float(max(1.0 - 1.0 / k for k in adam_block_kappas)),
        adam_block_kappas=adam_block_kappas,
    )


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of checking a predicted per-step contraction against a run."""

    which: str
    bound: float
    violations: int
    max_violation: float
    steps_checked: int
    per_step_ratios: np.ndarray


def _is_hard_instance(problem: QuadraticProblem, w0: np.ndarray) -> bool:
    if problem.dim != 2 or np.any(problem.h != 0):
        return False
    eigs = problem.eigenvalues
    if abs(eigs[0] - 5000.0) > 1e-6 or abs(eigs[-1] - 1.0) > 1e-9:
        return False
    lam, q = np.linalg.eigh(problem.matrix)
    energy = 0.5 * lam * (q.T @ w0) ** 2
    return bool(abs(energy[0] - energy[1]) <= 1e-9 * energy.sum())


def verify_bounds(trajectory: Trajectory, report: TheoryReport, which: str, slack: float = 1e-9) -> BoundCheck:
    """Check a trajectory against the predicted contraction factor.

    ``adam_upper`` requires an adam_fixed trajectory and verifies that every
    recorded step contracts the loss gap by at least ``report.adam_factor``
    (up to ``slack`` relative).  ``gd_lower`` requires a gd trajectory on the
    shipped hard instance and verifies that the largest per-eigendirection
    error contraction factor max_i |1 - eta lambda_i| never falls below
    ``report.gd_factor``, i.e. no step size escapes the floor.
    """
    if which not in ("gd_lower", "adam_upper"):
        raise ValueError(f"which must be 'gd_lower' or 'adam_upper', got {which!r}")
    ratios = trajectory.loss_ratios
    if ratios.size < 2:
        raise ValueError("trajectory is shorter than 2 steps")
    prev = ratios[:-1]
    nxt = ratios[1:]
    ok = prev > RATIO_FLOOR
    per_step = np.full(nxt.shape, np.nan)
    per_step[ok] = nxt[ok] / prev[ok]

    if which == "adam_upper":
        if trajectory.kind != "adam_fixed":
            raise ValueError(
                f"adam_upper applies to adam_fixed trajectories, got {trajectory.kind!r}"
            )
        bound = report.adam_factor
        excess = nxt[ok] - bound * prev[ok]
        rel = excess / prev[ok]
        violations = int(np.sum(rel > slack))
        max_violation = float(rel.max()) if rel.size else 0.0
        return BoundCheck(which, bound, violations, max(max_violation, 0.0), int(ok.sum()), per_step)

    if trajectory.kind != "gd":
        raise ValueError(f"gd_lower applies to gd trajectories, got {trajectory.kind!r}")
    problem = trajectory.problem
    if problem is None or not _is_hard_instance(problem, trajectory.w0):
        raise ValueError(
            "gd_lower requires the shipped hard instance "
            "(H = diag(1, 5000), h = 0, equal-energy initial point)"
        )
    bound = report.gd_factor
    factor = float(np.max(np.abs(1.0 - trajectory.eta * problem.eigenvalues)))
    shortfall = bound - factor
    violations = int(shortfall > slack)
    return BoundCheck(which, bound, violations, max(float(shortfall), 0.0), int(ok.sum()), per_step)


@dataclass(frozen=True)
class LimitCycleReport:
    cycling: bool
    tail_min_loss: float
    threshold: float


def detect_limit_cycle(trajectory: Trajectory, transient: int, window: int, threshold: float | None = None) -> LimitCycleReport:
    """Decide whether a run has settled into a non-vanishing loss cycle.

    Looks at absolute loss gaps over ``window`` iterations after ``transient``
    and flags cycling when their minimum stays above a threshold that scales
    with the squared step size (cycle amplitude is proportional to eta).
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    if trajectory.loss_ratios.size < transient + window:
        raise ValueError(
            f"trajectory has {trajectory.loss_ratios.size} recorded iterations, "
            f"need at least transient + window = {transient + window}"
        )
    if threshold is None:
        threshold = 1e-4 * trajectory.eta**2
    tail = trajectory.loss_ratios[transient : transient + window] * trajectory.initial_gap
    tail_min = float(tail.min())
    return LimitCycleReport(cycling=bool(tail_min > threshold), tail_min_loss=tail_min, threshold=float(threshold))
