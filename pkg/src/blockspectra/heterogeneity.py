"""Spectral normalization, Jensen-Shannon distances, and the heterogeneity score.

Blockwise densities are compared pairwise with the Jensen-Shannon divergence
(base-2 logs, so values live in [0, 1]); the mean over distinct pairs is the
scalar heterogeneity score.  Block spectra can be normalized before the
comparison so that blocks of very different curvature scale remain
comparable in shape.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from blockspectra.slq import SpectralDensity

MODES = ("tenth_largest", "max_abs", "none")

# Resampling onto a union grid is capped to keep pairwise work bounded.
MAX_UNION_POINTS = 65536


@dataclass(frozen=True)
class NormalizedSpectrum:
    """A spectrum (eigenvalues or density) after dividing by a positive scale."""

    value: object
    scale: float
    warning: str | None = None


@dataclass(frozen=True)
class HeterogeneityReport:
    """Pairwise Jensen-Shannon distances between block spectra.

    ``js0`` is the mean of the strict upper triangle of ``pairwise``.
    """

    labels: tuple
    pairwise: np.ndarray
    js0: float
    normalization_mode: str
    warnings: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.pairwise, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("pairwise matrix must be square")
        if len(self.labels) != m.shape[0]:
            raise ValueError("label count must match matrix size")
        if not np.array_equal(m, m.T):
            raise ValueError("pairwise matrix must be symmetric")
        if np.any(np.diag(m) != 0):
            raise ValueError("pairwise diagonal must be zero")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("pairwise entries must lie in [0, 1]")
        object.__setattr__(self, "pairwise", m)


def _eig_scale(eigs: np.ndarray, mode: str) -> tuple[float, str | None]:
    warning = None
    if mode == "tenth_largest":
        if eigs.size >= 10:
            scale = float(np.sort(eigs)[::-1][9])
        else:
            warning = (
                f"only {eigs.size} eigenvalues available; "
                "fell back from tenth_largest to max_abs"
            )
            scale = float(np.abs(eigs).max())
    elif mode == "max_abs":
        scale = float(np.abs(eigs).max())
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return scale, warning


def _density_support_scale(density: SpectralDensity) -> float:
    mask = density.values > 1e-12 * density.values.max()
    return float(np.abs(density.grid[mask]).max())


def rescale_density(density: SpectralDensity, scale: float) -> SpectralDensity:
    """Divide the eigenvalue axis by a positive scale, keeping unit mass."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    grid = density.grid / scale
    values = density.values * scale
    mass = np.trapezoid(values, grid)
    return SpectralDensity(grid=grid, values=values / mass, sigma=density.sigma / scale)


def normalize_spectrum(spectrum, mode: str = "tenth_largest", eigenvalues=None) -> NormalizedSpectrum:
    """Normalize an eigenvalue list or a density by a positive spectral scale.

    Modes: ``tenth_largest`` divides by the 10th largest eigenvalue (falling
    back to ``max_abs`` with a warning when fewer than 10 eigenvalues are
    known), ``max_abs`` by the largest magnitude, ``none`` leaves the input
    untouched.  For a density the scale is taken from ``eigenvalues`` when
    given, otherwise from the density's own support.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "none":
        return NormalizedSpectrum(value=spectrum, scale=1.0)

    if isinstance(spectrum, SpectralDensity):
        warning = None
        if eigenvalues is not None:
            scale, warning = _eig_scale(np.asarray(eigenvalues, dtype=float), mode)
        elif mode == "tenth_largest":
            warning = "no eigenvalues available for a density; fell back to max_abs on its support"
            scale = _density_support_scale(spectrum)
        else:
            scale = _density_support_scale(spectrum)
        if scale <= 0:
            raise ValueError(f"normalization scale must be positive, got {scale}")
        return NormalizedSpectrum(value=rescale_density(spectrum, scale), scale=scale, warning=warning)

    eigs = np.asarray(spectrum, dtype=float)
    if eigs.ndim != 1 or eigs.size == 0:
        raise ValueError("expected a nonempty 1-d eigenvalue array")
    scale, warning = _eig_scale(eigs, mode)
    if scale <= 0:
        raise ValueError(f"normalization scale must be positive, got {scale}")
    return NormalizedSpectrum(value=eigs / scale, scale=scale, warning=warning)


def log_magnitude_spectra(eigenvalue_lists, floor_rel: float = 1e-8) -> list[np.ndarray]:
    """log10 of eigenvalue magnitudes, floored relative to the global maximum.

    Multiplicative separation between spectra becomes translation on this
    axis, which a shared-width smoothing kernel can resolve no matter how
    many orders of magnitude the spectra span.
    """
    lists = [np.asarray(e, dtype=float) for e in eigenvalue_lists]
    if not lists or any(e.size == 0 for e in lists):
        raise ValueError("expected nonempty eigenvalue lists")
    gmax = max(float(np.abs(e).max()) for e in lists)
    if gmax <= 0:
        raise ValueError("all eigenvalues are zero")
    floor = gmax * floor_rel
    return [np.log10(np.maximum(np.abs(e), floor)) for e in lists]


def _union_grid(p: SpectralDensity, q: SpectralDensity) -> np.ndarray:
    lo = min(p.grid[0], q.grid[0])
    hi = max(p.grid[-1], q.grid[-1])
    dt = min(np.diff(p.grid).min(), np.diff(q.grid).min())
    n = int(np.ceil((hi - lo) / dt)) + 1
    n = min(max(n, 2), MAX_UNION_POINTS)
    return np.linspace(lo, hi, n)


def _resample(density: SpectralDensity, grid: np.ndarray) -> np.ndarray:
    values = np.interp(grid, density.grid, density.values, left=0.0, right=0.0)
    mass = np.trapezoid(values, grid)
    if mass <= 0:
        raise ValueError("density lost all mass during resampling")
    return values / mass


def _to_pmf(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    # Trapezoid quadrature weights turn the sampled density into a discrete
    # probability mass function on the grid.
    w = np.empty_like(grid)
    w[1:-1] = (grid[2:] - grid[:-2]) / 2
    w[0] = (grid[1] - grid[0]) / 2
    w[-1] = (grid[-1] - grid[-2]) / 2
    pmf = values * w
    return pmf / pmf.sum()


def _kl_base2(p: np.ndarray, m: np.ndarray) -> float:
    # m >= p/2 wherever p > 0, so m can only vanish through denormal
    # underflow; those terms contribute at most ~1e-323 and are dropped.
    mask = (p > 0) & (m > 0)
    return float(np.sum(p[mask] * np.log2(p[mask] / m[mask])))


def js_distance(p: SpectralDensity, q: SpectralDensity) -> float:
    """Jensen-Shannon divergence (base-2 logs) between two densities, in [0, 1].

    Densities on different grids are first linearly resampled onto a uniform
    union grid and renormalized.  Identical inputs give exactly 0; densities
    with disjoint supports give 1.
    """
    if np.any(p.values < 0) or np.any(q.values < 0):
        raise ValueError("densities must be nonnegative")
    if p.grid.shape == q.grid.shape and np.array_equal(p.grid, q.grid):
        grid, pv, qv = p.grid, p.values, q.values
    else:
        grid = _union_grid(p, q)
        pv = _resample(p, grid)
        qv = _resample(q, grid)
    pp = _to_pmf(grid, pv)
    qq = _to_pmf(grid, qv)
    mm = 0.5 * (pp + qq)
    js = 0.5 * _kl_base2(pp, mm) + 0.5 * _kl_base2(qq, mm)
    return float(np.clip(js, 0.0, 1.0))


def js_metric(p: SpectralDensity, q: SpectralDensity) -> float:
    """Square root of the divergence; a true metric, exposed as a variant."""
    return float(np.sqrt(js_distance(p, q)))


def pairwise_heatmap(
    densities,
    mode: str = "none",
    eigenvalues=None,
    labels=None,
) -> HeterogeneityReport:
    """All-pairs Jensen-Shannon distances plus their strict-upper-triangle mean.

    ``eigenvalues`` may supply one eigenvalue list per density to drive the
    normalization scale; without it, density-based fallbacks apply.
    """
    densities = list(densities)
    n = len(densities)
    if n < 2:
        raise ValueError(f"need at least 2 block densities, got {n}")
    if eigenvalues is not None and len(eigenvalues) != n:
        raise ValueError("eigenvalues must provide one list per density")
    if labels is None:
        labels = tuple(f"block{i}" for i in range(n))
    else:
        labels = tuple(labels)
        if len(labels) != n:
            raise ValueError("labels must match density count")

    warnings = []
    normalized = []
    for i, d in enumerate(densities):
        eigs = eigenvalues[i] if eigenvalues is not None else None
        ns = normalize_spectrum(d, mode=mode, eigenvalues=eigs)
        if ns.warning:
            warnings.append(f"{labels[i]}: {ns.warning}")
        normalized.append(ns.value)

    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = js_distance(normalized[i], normalized[j])
            matrix[i, j] = d
            matrix[j, i] = d
    upper = matrix[np.triu_indices(n, k=1)]
    return HeterogeneityReport(
        labels=labels,
        pairwise=matrix,
        js0=float(upper.mean()),
        normalization_mode=mode,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def save_heatmap_csv(path, report: HeterogeneityReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block", *report.labels])
        for label, row in zip(report.labels, report.pairwise):
            writer.writerow([label, *[repr(float(x)) for x in row]])


def load_heatmap_csv(path) -> tuple[tuple, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        labels = tuple(header[1:])
        rows = [[float(x) for x in row[1:]] for row in reader if row]
    return labels, np.asarray(rows)


def save_js0_summary(path, report: HeterogeneityReport) -> None:
    with open(path, "w") as fh:
        fh.write(f"js0 = {report.js0!r}\n")
        fh.write(f"blocks = {len(report.labels)}\n")
        fh.write(f"normalization_mode = {report.normalization_mode}\n")
        for w in report.warnings:
            fh.write(f"warning = {w}\n")
