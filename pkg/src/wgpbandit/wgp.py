"""Weighted Gaussian-process regression with exponentially increasing weights.

Observations at rounds s = 1..t carry nominal weights w_s = eta^{-s} and the
ridge regularizer is lambda_t = lambda * w_t.  Nominal weights overflow for
long horizons, so everything here works with *relative* weights
u_s = w_s / w_t = eta^{t - s} in (0, 1] and the constant regularizer lambda;
the posterior is invariant under that common rescaling (checked by
:func:`posterior_scale_invariance_check`).

With U = diag(sqrt(u_s)), the fitted quantities are

    mean(x) = kbar(x)^T (Kbar + lambda I)^{-1} ybar
    var(x)  = k(x, x) - kbar(x)^T (Kbar + lambda I)^{-1} kbar(x)

where Kbar = U K U, kbar(x) = U k(x), ybar = U y.  The feature-space variant
replaces kernel evaluations by quadrature-feature inner products and may be
solved in the 2m-dimensional primal form when the history outgrows the
feature count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import InputError, NumericalError
from .kernels import (
    DomainGrid,
    KernelFamily,
    KernelSpec,
    grid_kernel_matrix,
    kernel_vector,
)
from .qff import QffMap, qff_feature_matrix, qff_features

# Escalating diagonal boosts tried when a factorization fails; failures past
# the ladder are loud by design.
_JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

# A variance clamp larger than this is reported as a numerical warning rather
# than benign roundoff.
CLAMP_WARN_THRESHOLD = 1e-6


@dataclass(frozen=True)
class WeightScheme:
    """Discount factor eta, ridge level lam, and relative-weight cutoff.

    eta = 1 recovers the uniform-weight (stationary) method.  Rounds whose
    relative weight falls below ``truncation_eps`` are dropped before
    factorization, capping the effective history length at
    ceil(ln(1/eps) / ln(1/eta)).
    """

    eta: float = 1.0
    lam: float = 1.0
    truncation_eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise InputError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.lam > 0.0:
            raise InputError(f"lam must be positive, got {self.lam}")
        if not 0.0 <= self.truncation_eps < 1.0:
            raise InputError(
                f"truncation_eps must lie in [0, 1), got {self.truncation_eps}"
            )

    def relative_weights(self, rounds: np.ndarray, pivot: int) -> np.ndarray:
        """u_s = eta^{pivot - s} for each round counter s."""
        return self.eta ** (pivot - np.asarray(rounds, dtype=float))


@dataclass(frozen=True)
class BanditHistory:
    """Ordered (arm_index, reward, round) triples over a fixed domain."""

    domain: DomainGrid
    arms: tuple[int, ...] = ()
    rewards: tuple[float, ...] = ()
    rounds: tuple[int, ...] = ()

    def __post_init__(self):
        if not len(self.arms) == len(self.rewards) == len(self.rounds):
            raise InputError("arms, rewards, rounds must have equal length")
        prev = 0
        for r in self.rounds:
            if r <= prev:
                raise InputError("round counters must be strictly increasing from 1")
            prev = r
        n = self.domain.size
        for a in self.arms:
            if not 0 <= a < n:
                raise InputError(f"arm index {a} outside domain of size {n}")

    def __len__(self) -> int:
        return len(self.arms)

    @staticmethod
    def empty(domain: DomainGrid) -> "BanditHistory":
        return BanditHistory(domain=domain)

    def append(self, arm: int, reward: float, round_: int) -> "BanditHistory":
        return replace(
            self,
            arms=self.arms + (int(arm),),
            rewards=self.rewards + (float(reward),),
            rounds=self.rounds + (int(round_),),
        )

    def tail(self, count: int) -> "BanditHistory":
        """The most recent ``count`` rounds (sliding-window retention)."""
        if count >= len(self):
            return self
        return replace(
            self,
            arms=self.arms[-count:],
            rewards=self.rewards[-count:],
            rounds=self.rounds[-count:],
        )


@dataclass(frozen=True)
class WeightedPosterior:
    """Evaluated posterior mean/variance plus its internal factorization.

    ``grid_means``/``grid_vars`` cover the whole domain grid (the quantities
    every policy consumes); ``mean_at``/``var_at`` evaluate arbitrary points
    for the SE family.  ``clamp_warnings`` counts grid points whose raw
    variance left [0, k(x,x)] by more than the benign-roundoff threshold.
    """

    t: int
    domain: DomainGrid
    scheme: WeightScheme
    grid_means: np.ndarray = field(repr=False)
    grid_vars: np.ndarray = field(repr=False)
    clamp_warnings: int = 0
    # retained history in relative-weight form
    _arms: np.ndarray | None = field(default=None, repr=False)
    _sqrt_u: np.ndarray | None = field(default=None, repr=False)
    _alpha: np.ndarray | None = field(default=None, repr=False)
    _factor: np.ndarray | None = field(default=None, repr=False)
    _spec: KernelSpec | None = field(default=None, repr=False)
    _qmap: QffMap | None = field(default=None, repr=False)
    _primal: bool = field(default=False, repr=False)
    # populated only for dual-form feature posteriors
    _phi_hist: np.ndarray | None = field(default=None, repr=False)

    @property
    def factorization(self) -> np.ndarray | None:
        """Lower-triangular factor of the regularized weighted system."""
        return self._factor

    def grid_sds(self) -> np.ndarray:
        return np.sqrt(self.grid_vars)

    def mean_at(self, x) -> float:
        """Posterior mean at ``x``: a coordinate for the SE family (an
        integer is read as an arm index), an arm index for table kernels."""
        mean, _ = self._evaluate(x)
        return mean

    def var_at(self, x) -> float:
        """Posterior variance at ``x`` (same addressing as ``mean_at``)."""
        _, var = self._evaluate(x)
        return var

    # -- single-point evaluation -------------------------------------------

    def _evaluate(self, x) -> tuple[float, float]:
        if self._qmap is not None:
            return self._evaluate_qff(x)
        return self._evaluate_kernel(x)

    def _evaluate_kernel(self, x) -> tuple[float, float]:
        spec = self._spec
        if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
            point = self._point_of(x)
            prior = 1.0
        else:
            point = int(x)
            prior = float(spec.covariance_table[point, point])
        if self.t == 0 or self._arms is None or len(self._arms) == 0:
            return 0.0, prior
        if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
            kvec = kernel_vector(self.domain.points[self._arms], point, spec)
        else:
            kvec = kernel_vector(self._arms, point, spec)
        kbar = self._sqrt_u * kvec
        mean = float(kbar @ self._alpha)
        v = solve_triangular(self._factor, kbar, lower=True)
        var = prior - float(v @ v)
        return mean, _clamp_var(var, prior)

    def _evaluate_qff(self, x) -> tuple[float, float]:
        phi = qff_features(self._qmap, self._point_of(x))
        prior = self._qmap.self_inner_product
        if self.t == 0 or self._arms is None or len(self._arms) == 0:
            return 0.0, prior
        if self._primal:
            mean = float(phi @ self._alpha)
            v = solve_triangular(self._factor, phi, lower=True)
            var = self.scheme.lam * float(v @ v)
        else:
            z_phi = (self._sqrt_u[:, None] * self._phi_hist) @ phi
            mean = float(z_phi @ self._alpha)
            v = solve_triangular(self._factor, z_phi, lower=True)
            var = prior - float(v @ v)
        return mean, _clamp_var(var, prior)

    def _point_of(self, x) -> np.ndarray:
        if isinstance(x, (int, np.integer)):
            return self.domain.points[int(x)]
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if x_arr.shape != (self.domain.dimension,):
            raise InputError(
                f"point has shape {x_arr.shape}, expected ({self.domain.dimension},)"
            )
        return x_arr


def _clamp_var(var: float, prior: float) -> float:
    return float(min(max(var, 0.0), prior))


def _chol_lower(matrix: np.ndarray, context: str) -> tuple[np.ndarray, float]:
    """Cholesky with an escalating jitter ladder; loud failure past it."""
    n = matrix.shape[0]
    scale = max(1.0, float(np.trace(matrix)) / max(n, 1))
    for boost in _JITTER_LADDER:
        try:
            shifted = matrix if boost == 0.0 else matrix + boost * scale * np.eye(n)
            return cholesky(shifted, lower=True), boost
        except np.linalg.LinAlgError:
            continue
        except ValueError:
            break
    diag = np.diag(matrix)
    raise NumericalError(
        f"factorization failed after jitter escalation ({context})",
        details={
            "size": n,
            "trace": float(np.trace(matrix)),
            "min_diag": float(np.min(diag)) if n else 0.0,
            "max_diag": float(np.max(diag)) if n else 0.0,
            "jitter_ladder": list(_JITTER_LADDER),
        },
    )


def _retained(history: BanditHistory, scheme: WeightScheme):
    """Relative weights with pivot at the last observed round, after dropping
    rounds whose weight falls below the truncation cutoff."""
    arms = np.asarray(history.arms, dtype=int)
    ys = np.asarray(history.rewards, dtype=float)
    rounds = np.asarray(history.rounds, dtype=float)
    pivot = float(rounds[-1])
    u = scheme.eta ** (pivot - rounds)
    keep = u >= scheme.truncation_eps
    return arms[keep], ys[keep], u[keep], rounds[keep]


def fit_weighted_posterior(
    history: BanditHistory,
    scheme: WeightScheme,
    spec: KernelSpec,
    grid_matrix: np.ndarray | None = None,
) -> WeightedPosterior:
    """Fit the weighted posterior in the normalized relative-weight form.

    ``grid_matrix`` optionally reuses a precomputed full-grid kernel matrix
    (the fit is identical with or without it).
    """
    domain = history.domain
    if grid_matrix is None:
        grid_matrix = grid_kernel_matrix(domain, spec)
    prior_diag = np.diag(grid_matrix).copy()

    if len(history) == 0:
        return WeightedPosterior(
            t=0,
            domain=domain,
            scheme=scheme,
            grid_means=np.zeros(domain.size),
            grid_vars=prior_diag,
            _spec=spec,
        )

    arms, ys, u, _ = _retained(history, scheme)
    sqrt_u = np.sqrt(u)
    n = len(arms)

    k_sub = grid_matrix[np.ix_(arms, arms)]
    kbar = np.outer(sqrt_u, sqrt_u) * k_sub + scheme.lam * np.eye(n)
    factor, _ = _chol_lower(kbar, f"weighted posterior, t={history.rounds[-1]}")
    ybar = sqrt_u * ys
    alpha = cho_solve((factor, True), ybar)

    kbar_grid = sqrt_u[:, None] * grid_matrix[arms, :]  # (n, N)
    means = kbar_grid.T @ alpha
    v = solve_triangular(factor, kbar_grid, lower=True)
    raw_vars = prior_diag - np.sum(v * v, axis=0)
    grid_vars, clamps = _clamp_grid(raw_vars, prior_diag)

    return WeightedPosterior(
        t=len(history),
        domain=domain,
        scheme=scheme,
        grid_means=means,
        grid_vars=grid_vars,
        clamp_warnings=clamps,
        _arms=arms,
        _sqrt_u=sqrt_u,
        _alpha=alpha,
        _factor=factor,
        _spec=spec,
    )


def _clamp_grid(raw: np.ndarray, cap: np.ndarray) -> tuple[np.ndarray, int]:
    clipped = np.clip(raw, 0.0, cap)
    overshoot = np.abs(raw - clipped)
    return clipped, int(np.count_nonzero(overshoot > CLAMP_WARN_THRESHOLD))


def fit_qff_posterior(
    history: BanditHistory,
    scheme: WeightScheme,
    qmap: QffMap,
    form: str = "auto",
) -> WeightedPosterior:
    """Feature-space analogue of :func:`fit_weighted_posterior`.

    ``form`` selects the linear system: "dual" solves the t-by-t system in
    kernel space, "primal" the 2m-by-2m system in feature space, and "auto"
    picks primal once the retained history outgrows the feature count.  The
    two agree to solver precision.
    """
    if form not in ("auto", "primal", "dual"):
        raise InputError(f"form must be auto, primal, or dual, got {form!r}")
    domain = history.domain
    phi_grid = qff_feature_matrix(qmap, domain.points)  # (N, 2m)
    prior = qmap.self_inner_product
    prior_diag = np.full(domain.size, prior)

    if len(history) == 0:
        return WeightedPosterior(
            t=0,
            domain=domain,
            scheme=scheme,
            grid_means=np.zeros(domain.size),
            grid_vars=prior_diag,
            _qmap=qmap,
        )

    arms, ys, u, _ = _retained(history, scheme)
    sqrt_u = np.sqrt(u)
    n = len(arms)
    phi_hist = phi_grid[arms]  # (n, 2m)
    z = sqrt_u[:, None] * phi_hist
    ybar = sqrt_u * ys
    use_primal = form == "primal" or (form == "auto" and qmap.feature_dim < n)

    if use_primal:
        a = z.T @ z + scheme.lam * np.eye(qmap.feature_dim)
        factor, _ = _chol_lower(a, f"feature posterior (primal), t={history.rounds[-1]}")
        alpha = cho_solve((factor, True), z.T @ ybar)  # theta-hat
        means = phi_grid @ alpha
        v = solve_triangular(factor, phi_grid.T, lower=True)
        raw_vars = scheme.lam * np.sum(v * v, axis=0)
    else:
        g = z @ z.T + scheme.lam * np.eye(n)
        factor, _ = _chol_lower(g, f"feature posterior (dual), t={history.rounds[-1]}")
        alpha = cho_solve((factor, True), ybar)
        kbar_grid = z @ phi_grid.T  # (n, N)
        means = kbar_grid.T @ alpha
        v = solve_triangular(factor, kbar_grid, lower=True)
        raw_vars = prior_diag - np.sum(v * v, axis=0)

    grid_vars, clamps = _clamp_grid(raw_vars, prior_diag)
    return WeightedPosterior(
        t=len(history),
        domain=domain,
        scheme=scheme,
        grid_means=means,
        grid_vars=grid_vars,
        clamp_warnings=clamps,
        _arms=arms,
        _sqrt_u=sqrt_u,
        _alpha=alpha,
        _factor=factor,
        _qmap=qmap,
        _primal=use_primal,
        _phi_hist=None if use_primal else phi_hist,
    )


def posterior_scale_invariance_check(
    history: BanditHistory,
    scheme: WeightScheme,
    spec: KernelSpec,
    c: float,
) -> bool:
    """True iff the posterior computed from nominal weights scaled by c
    (with the regularizer scaled alongside) matches the normalized-form fit
    to 1e-8 at every grid point."""
    if not 1e-3 <= c <= 1e3:
        raise InputError(f"scale c must lie in [1e-3, 1e3], got {c}")
    if len(history) > 50:
        raise InputError("scale-invariance check is limited to t <= 50")
    if len(history) == 0:
        return True
    pivot = history.rounds[-1]
    if c * scheme.eta ** (-float(pivot)) > 1e300:
        raise InputError("nominal weights would overflow at this scale")

    fitted = fit_weighted_posterior(history, scheme, spec)

    # Naive nominal-weight evaluation on the same retained rounds.
    grid = grid_kernel_matrix(history.domain, spec)
    arms, ys, u, _ = _retained(history, scheme)
    w = c * u * scheme.eta ** (-float(pivot))  # c * eta^{-s}
    lam_t = scheme.lam * c * scheme.eta ** (-float(pivot))
    sw = np.sqrt(w)
    k_sub = grid[np.ix_(arms, arms)]
    k_tilde = np.outer(sw, sw) * k_sub + lam_t * np.eye(len(arms))
    rhs = np.linalg.solve(k_tilde, sw * ys)
    k_tilde_grid = sw[:, None] * grid[arms, :]
    means = k_tilde_grid.T @ rhs
    sol = np.linalg.solve(k_tilde, k_tilde_grid)
    vars_ = np.diag(grid) - np.sum(k_tilde_grid * sol, axis=0)
    vars_ = np.clip(vars_, 0.0, np.diag(grid))

    return bool(
        np.max(np.abs(means - fitted.grid_means)) <= 1e-8
        and np.max(np.abs(vars_ - fitted.grid_vars)) <= 1e-8
    )
