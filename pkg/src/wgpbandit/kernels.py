"""Kernel functions, kernel matrices, and the constants the gain bounds use.

Two kernel families are supported:

* squared exponential on points in [0,1]^d, and
* a table-driven empirical-covariance kernel indexed by arm (used by the
  price environment).

Points for the SE family are coordinate arrays; points for the empirical
family are integer arm indices into the stored table.  Downstream code never
compares points by floating-point equality — arms are identified by their
index within a :class:`DomainGrid`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError

# Diagonal jitter applied to standalone kernel matrices before PSD checks:
# scale-aware so a table in price units gets a proportionate boost.
_JITTER_REL = 1e-10
_PSD_TOL = 1e-8


class KernelFamily(Enum):
    SQUARED_EXPONENTIAL = "squared_exponential"
    EMPIRICAL_COVARIANCE = "empirical_covariance"


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus the bound constants consumed by the gain bounds.

    ``kdot`` is an upper bound on |k(x, x')| and ``variance_cap`` bounds
    k(x, x); both equal 1 for the SE family and for the normalized
    empirical-covariance table.
    """

    family: KernelFamily
    lengthscale: float | None = None
    covariance_table: np.ndarray | None = None
    kdot: float = 1.0
    variance_cap: float = 1.0

    def __post_init__(self):
        if self.family is KernelFamily.SQUARED_EXPONENTIAL:
            if self.lengthscale is None or not self.lengthscale > 0:
                raise InputError("SE kernel requires lengthscale > 0")
        elif self.family is KernelFamily.EMPIRICAL_COVARIANCE:
            if self.covariance_table is None:
                raise InputError("empirical-covariance kernel requires a table")

    @staticmethod
    def squared_exponential(lengthscale: float) -> "KernelSpec":
        return KernelSpec(
            family=KernelFamily.SQUARED_EXPONENTIAL,
            lengthscale=float(lengthscale),
            kdot=1.0,
            variance_cap=1.0,
        )

    @staticmethod
    def empirical_covariance(table: np.ndarray) -> "KernelSpec":
        """Build a table kernel from a raw covariance matrix.

        The table is symmetrized, jittered, normalized so its maximum
        diagonal entry is 1 (keeping k(x, x) <= 1), and checked for positive
        semidefiniteness within tolerance.
        """
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise InputError(
                f"covariance table must be square, got shape {table.shape}"
            )
        asym = float(np.max(np.abs(table - table.T))) if table.size else 0.0
        scale = max(1.0, float(np.max(np.abs(table)))) if table.size else 1.0
        if asym > 1e-8 * scale:
            raise InputError(f"covariance table is not symmetric (max gap {asym:g})")
        table = 0.5 * (table + table.T)
        n = table.shape[0]
        jitter = _JITTER_REL * max(1.0, float(np.trace(table)) / max(n, 1))
        table = table + jitter * np.eye(n)
        top = float(np.max(np.diag(table)))
        if top <= 0:
            raise InputError("covariance table has no positive diagonal entry")
        table = table / top
        smallest = float(np.linalg.eigvalsh(table)[0])
        if smallest < -_PSD_TOL * max(1.0, float(np.trace(table))):
            raise InputError(
                f"covariance table is not positive semidefinite "
                f"(smallest eigenvalue {smallest:g})"
            )
        table.setflags(write=False)
        return KernelSpec(
            family=KernelFamily.EMPIRICAL_COVARIANCE,
            covariance_table=table,
            kdot=1.0,
            variance_cap=1.0,
        )


@dataclass(frozen=True)
class DomainGrid:
    """A fixed, ordered, finite action set in [0,1]^d.

    Arms are addressed by index; ``points[i]`` is the coordinate of arm i.
    """

    dimension: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise InputError(
                f"points must have shape (n, {self.dimension}), got {pts.shape}"
            )
        if pts.shape[0] == 0:
            raise InputError("domain grid must contain at least one point")
        if np.min(pts) < 0.0 or np.max(pts) > 1.0:
            raise InputError("grid coordinates must lie in [0, 1]")
        if len(np.unique(pts, axis=0)) != pts.shape[0]:
            raise InputError("grid points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @staticmethod
    def uniform(n: int, dimension: int = 1) -> "DomainGrid":
        """n evenly spaced points covering [0, 1] per axis (1-D only)."""
        if dimension != 1:
            raise InputError("uniform grids are built for dimension 1")
        if n < 1:
            raise InputError("grid size must be positive")
        pts = np.linspace(0.0, 1.0, n)[:, None] if n > 1 else np.zeros((1, 1))
        return DomainGrid(dimension=1, points=pts)

    @staticmethod
    def indexed(n_arms: int) -> "DomainGrid":
        """A purely index-addressed grid (table kernels); coordinates are
        evenly spaced placeholders in [0, 1]."""
        return DomainGrid.uniform(n_arms)


# ---------------------------------------------------------------------------
# kernel evaluations
# ---------------------------------------------------------------------------


def se_kernel(x, x2, lengthscale: float) -> float:
    """Squared-exponential kernel exp(-||x - x2||^2 / (2 l^2))."""
    if not lengthscale > 0:
        raise InputError("lengthscale must be positive")
    a = np.atleast_1d(np.asarray(x, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    sq = float(np.sum((a - b) ** 2))
    return float(np.exp(-sq / (2.0 * lengthscale**2)))


def _as_point_array(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise InputError(f"expected a list of points, got shape {pts.shape}")
    return pts


def _se_cross(a: np.ndarray, b: np.ndarray, lengthscale: float) -> np.ndarray:
    sq = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * lengthscale**2))


def kernel_matrix(points, spec: KernelSpec) -> np.ndarray:
    """K[i][j] = k(points[i], points[j]).

    For the SE family ``points`` is a list of coordinates; for the
    empirical-covariance family it is a sequence of arm indices into the
    stored table.
    """
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        pts = _as_point_array(points)
        if pts.shape[0] == 0:
            raise InputError("kernel_matrix requires a nonempty point list")
        out = _se_cross(pts, pts, spec.lengthscale)
        return 0.5 * (out + out.T)
    idx = _as_arm_indices(points, spec)
    return spec.covariance_table[np.ix_(idx, idx)].copy()


def kernel_vector(points, x, spec: KernelSpec) -> np.ndarray:
    """Entry s = k(points[s], x); length matches ``points``."""
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        pts = _as_point_array(points)
        if pts.shape[0] == 0:
            return np.zeros(0)
        q = np.atleast_1d(np.asarray(x, dtype=float))
        if q.shape != (pts.shape[1],):
            raise InputError(
                f"query dimension {q.shape} does not match points {pts.shape}"
            )
        return _se_cross(pts, q[None, :], spec.lengthscale)[:, 0]
    idx = _as_arm_indices(points, spec)
    xi = int(x)
    _check_arm(xi, spec)
    return spec.covariance_table[idx, xi].copy()


def _as_arm_indices(points, spec: KernelSpec) -> np.ndarray:
    idx = np.asarray(points)
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        raise InputError("table kernels are indexed by integer arm indices")
    idx = idx.astype(int).ravel()
    for i in idx:
        _check_arm(int(i), spec)
    return idx


def _check_arm(i: int, spec: KernelSpec) -> None:
    n = spec.covariance_table.shape[0]
    if not 0 <= i < n:
        raise InputError(f"arm index {i} outside table of size {n}")


def grid_kernel_matrix(domain: DomainGrid, spec: KernelSpec) -> np.ndarray:
    """The full arm-by-arm kernel matrix for a domain grid.

    Everything downstream (posteriors, gains, policies) works from this
    single precomputed matrix plus arm indices.
    """
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        return kernel_matrix(domain.points, spec)
    if spec.covariance_table.shape[0] != domain.size:
        raise InputError(
            f"covariance table size {spec.covariance_table.shape[0]} "
            f"does not match domain size {domain.size}"
        )
    return np.array(spec.covariance_table)


def apply_jitter(matrix: np.ndarray) -> np.ndarray:
    """Scale-aware diagonal jitter for standalone PSD checks."""
    n = matrix.shape[0]
    return matrix + _JITTER_REL * max(1.0, float(np.trace(matrix)) / max(n, 1)) * np.eye(n)
