"""Non-stationary reward environments over a fixed action grid.

Synthetic rewards are random kernel-span functions f(x) = sum_i a_i k(x, c_i)
whose coefficients are uniform on [-1, 1]; change over time is either abrupt
(piecewise-constant phases separated by breakpoints) or slow (piecewise-linear
coefficient interpolation between three anchors).  A price environment reads
a day-by-stock matrix instead, using the empirical covariance of the columns
as its kernel.

Noise is a counter-based Gaussian stream keyed by (seed, round, arm), so two
policies replayed against the same seed observe identical noise at identical
(round, arm) pairs — common random numbers by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IngestionError, InputError, ProtocolError
from .kernels import DomainGrid, KernelSpec, grid_kernel_matrix

# Fixed stream tag separating reward noise from any other seeded draw.
_NOISE_STREAM = 0x5EED


@dataclass(frozen=True)
class RkhsFunction:
    """A kernel-span function f(x) = sum_i alphas[i] * k(x, centers[i]).

    ``center_indices`` address the domain grid; ``grid_values`` caches f on
    the full grid; ``rkhs_norm`` is sqrt(alpha^T K alpha) over the centers.
    """

    domain: DomainGrid
    spec: KernelSpec
    alphas: np.ndarray = field(repr=False)
    center_indices: np.ndarray = field(repr=False)
    grid_values: np.ndarray = field(repr=False)
    rkhs_norm: float = 0.0

    def value_at_arm(self, arm: int) -> float:
        return float(self.grid_values[arm])


def sample_rkhs_function(
    M: int,
    domain: DomainGrid,
    spec: KernelSpec,
    seed_or_rng,
    centers: np.ndarray | None = None,
    grid_matrix: np.ndarray | None = None,
) -> RkhsFunction:
    """Draw coefficients uniform on [-1, 1] over M grid centers.

    Centers are drawn without replacement (sorted) unless supplied; passing
    the same center set to several draws makes their differences exact
    quadratic forms over shared centers.
    """
    if M < 1:
        raise InputError("M must be positive")
    if M > domain.size:
        raise InputError(f"M = {M} exceeds domain size {domain.size}")
    rng = np.random.default_rng(seed_or_rng) if isinstance(seed_or_rng, (int, np.integer)) else seed_or_rng
    if centers is None:
        centers = np.sort(rng.choice(domain.size, size=M, replace=False))
    else:
        centers = np.asarray(centers, dtype=int)
        if centers.shape != (M,):
            raise InputError("centers must match M")
    alphas = rng.uniform(-1.0, 1.0, size=M)
    if grid_matrix is None:
        grid_matrix = grid_kernel_matrix(domain, spec)
    k_cc = grid_matrix[np.ix_(centers, centers)]
    norm = float(np.sqrt(max(0.0, alphas @ k_cc @ alphas)))
    values = grid_matrix[:, centers] @ alphas
    alphas.setflags(write=False)
    centers.setflags(write=False)
    values.setflags(write=False)
    return RkhsFunction(
        domain=domain,
        spec=spec,
        alphas=alphas,
        center_indices=centers,
        grid_values=values,
        rkhs_norm=norm,
    )


class ScheduleKind:
    ABRUPT = "abrupt"
    SLOW = "slow"


@dataclass(frozen=True)
class ChangeSchedule:
    """How the reward function moves over rounds 1..T.

    Abrupt: ``phases[i]`` is active while the round has passed i breakpoints
    (a breakpoint round already belongs to the next phase).  Slow: the
    coefficient vector interpolates anchor 0 -> 1 over the first half of the
    horizon and 1 -> 2 over the second.
    """

    kind: str
    T: int
    functions: tuple[RkhsFunction, ...]
    breakpoints: tuple[int, ...] = ()

    def __post_init__(self):
        if self.T < 1:
            raise InputError("horizon T must be >= 1")
        if self.kind == ScheduleKind.ABRUPT:
            bps = self.breakpoints
            if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
                raise InputError("breakpoints must be strictly increasing")
            if len(self.functions) != len(bps) + 1:
                raise InputError("abrupt schedules need breakpoints + 1 phases")
        elif self.kind == ScheduleKind.SLOW:
            if len(self.functions) != 3:
                raise InputError("slow schedules need exactly 3 anchors")
            if self.T % 2 != 0:
                raise InputError("slow schedules need an even horizon")
            cs = [tuple(f.center_indices) for f in self.functions]
            if len(set(cs)) != 1:
                raise InputError("slow anchors must share one center set")
        else:
            raise InputError(f"unknown schedule kind {self.kind!r}")

    @property
    def domain(self) -> DomainGrid:
        return self.functions[0].domain

    def phase_index(self, t: int) -> int:
        """Abrupt only: number of breakpoints at or before round t."""
        return int(np.searchsorted(np.asarray(self.breakpoints), t, side="right"))

    def coefficients_at(self, t: int) -> np.ndarray:
        """The active coefficient vector at round t (shared-center form)."""
        self._check_round(t)
        if self.kind == ScheduleKind.ABRUPT:
            return np.asarray(self.functions[self.phase_index(t)].alphas)
        a0, a1, a2 = (np.asarray(f.alphas) for f in self.functions)
        half = self.T // 2
        if t <= half:
            w = 2.0 * t / self.T
            return (1.0 - w) * a0 + w * a1
        w = (2.0 * t - self.T) / self.T
        return (1.0 - w) * a1 + w * a2

    def _check_round(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise InputError(f"round {t} outside horizon [1, {self.T}]")


def abrupt_schedule(
    breakpoints, phases, T: int
) -> ChangeSchedule:
    return ChangeSchedule(
        kind=ScheduleKind.ABRUPT,
        T=T,
        functions=tuple(phases),
        breakpoints=tuple(int(b) for b in breakpoints),
    )


def slow_schedule(anchors, T: int) -> ChangeSchedule:
    return ChangeSchedule(kind=ScheduleKind.SLOW, T=T, functions=tuple(anchors))


def reward_at(schedule: ChangeSchedule, t: int, x) -> float:
    """Noiseless reward at round t; ``x`` is an arm index, or a coordinate
    for SE-kernel domains."""
    schedule._check_round(t)
    if schedule.kind == ScheduleKind.ABRUPT:
        f = schedule.functions[schedule.phase_index(t)]
        return _eval_function(f, x)
    coeffs = schedule.coefficients_at(t)
    base = schedule.functions[0]
    if isinstance(x, (int, np.integer)):
        centers = base.center_indices
        k_col = grid_kernel_matrix(base.domain, base.spec)[int(x), centers]
        return float(k_col @ coeffs)
    from .kernels import kernel_vector

    pts = base.domain.points[base.center_indices]
    return float(kernel_vector(pts, x, base.spec) @ coeffs)


def _eval_function(f: RkhsFunction, x) -> float:
    if isinstance(x, (int, np.integer)):
        return f.value_at_arm(int(x))
    from .kernels import kernel_vector

    pts = f.domain.points[f.center_indices]
    return float(kernel_vector(pts, x, f.spec) @ np.asarray(f.alphas))


def schedule_mean_rewards(schedule: ChangeSchedule) -> np.ndarray:
    """The full (T, n_arms) noiseless reward table for a schedule."""
    domain = schedule.domain
    grid = grid_kernel_matrix(domain, schedule.functions[0].spec)
    centers = schedule.functions[0].center_indices
    out = np.empty((schedule.T, domain.size))
    if schedule.kind == ScheduleKind.ABRUPT:
        values = [np.asarray(f.grid_values) for f in schedule.functions]
        for t in range(1, schedule.T + 1):
            out[t - 1] = values[schedule.phase_index(t)]
        return out
    k_block = grid[:, centers]
    for t in range(1, schedule.T + 1):
        out[t - 1] = k_block @ schedule.coefficients_at(t)
    return out


def realized_budget(schedule: ChangeSchedule) -> float:
    """sum_{t=1}^{T-1} ||f_{t+1} - f_t||_H via coefficient quadratic forms.

    Abrupt phase pairs may have different center sets, handled over the union
    of centers; slow schedules share centers by construction.
    """
    total = 0.0
    if schedule.kind == ScheduleKind.ABRUPT:
        for t in range(1, schedule.T):
            i, j = schedule.phase_index(t), schedule.phase_index(t + 1)
            if i != j:
                total += function_distance(schedule.functions[i], schedule.functions[j])
        return total
    grid = grid_kernel_matrix(schedule.domain, schedule.functions[0].spec)
    centers = schedule.functions[0].center_indices
    k_cc = grid[np.ix_(centers, centers)]
    prev = schedule.coefficients_at(1)
    for t in range(2, schedule.T + 1):
        cur = schedule.coefficients_at(t)
        d = cur - prev
        total += float(np.sqrt(max(0.0, d @ k_cc @ d)))
        prev = cur
    return total


def function_distance(f: RkhsFunction, g: RkhsFunction) -> float:
    """||f - g||_H over the union of the two center sets."""
    if f.domain.size != g.domain.size:
        raise InputError("functions live on different domains")
    union = np.unique(np.concatenate([f.center_indices, g.center_indices]))
    pos = {int(c): i for i, c in enumerate(union)}
    delta = np.zeros(len(union))
    for c, a in zip(f.center_indices, f.alphas):
        delta[pos[int(c)]] += a
    for c, a in zip(g.center_indices, g.alphas):
        delta[pos[int(c)]] -= a
    grid = grid_kernel_matrix(f.domain, f.spec)
    k_uu = grid[np.ix_(union, union)]
    return float(np.sqrt(max(0.0, delta @ k_uu @ delta)))


@dataclass(frozen=True)
class BudgetLedger:
    """Declared variation budget against the schedule's realized total."""

    declared_B_T: float
    realized: float

    def __post_init__(self):
        if self.realized > self.declared_B_T + 1e-9:
            raise InputError(
                f"realized variation {self.realized:g} exceeds declared "
                f"budget {self.declared_B_T:g}"
            )


class NoiseModel:
    """Seeded Gaussian noise, standard deviation R, indexed by (round, arm).

    The stream advances by round index, never by call count, and refuses a
    second draw at the same round — the guard behind common random numbers.
    """

    def __init__(self, R: float, seed: int, T: int, n_arms: int):
        if R < 0:
            raise InputError("R must be nonnegative")
        if T < 1 or n_arms < 1:
            raise InputError("T and n_arms must be positive")
        self.R = float(R)
        self.seed = int(seed)
        rng = np.random.default_rng([int(seed), _NOISE_STREAM])
        self._draws = self.R * rng.standard_normal((T, n_arms))
        self._seen: set[int] = set()

    def draw(self, t: int, arm: int) -> float:
        if not 1 <= t <= self._draws.shape[0]:
            raise InputError(f"round {t} outside noise horizon")
        if t in self._seen:
            raise ProtocolError(f"round {t} was already observed")
        self._seen.add(t)
        return float(self._draws[t - 1, int(arm)])

    def peek(self, t: int, arm: int) -> float:
        """The draw value without consuming the round (test support)."""
        return float(self._draws[t - 1, int(arm)])


@dataclass(frozen=True)
class Environment:
    """A fully materialized episode environment.

    ``mean_rewards[t-1, arm]`` is the noiseless reward; the exact per-round
    best arm and its value come from the same table, making regret exact.
    """

    name: str
    domain: DomainGrid
    spec: KernelSpec
    T: int
    noise_R: float
    mean_rewards: np.ndarray = field(repr=False)
    schedule: ChangeSchedule | None = None
    budget: BudgetLedger | None = None
    function_norm_bound: float = 1.0

    def best_arm(self, t: int) -> tuple[int, float]:
        row = self.mean_rewards[t - 1]
        arm = int(np.argmax(row))
        return arm, float(row[arm])

    def noise_model(self, seed: int) -> NoiseModel:
        return NoiseModel(self.noise_R, seed, self.T, self.domain.size)


def observe(env: Environment, t: int, arm_index: int, noise: NoiseModel) -> float:
    """y_t = f_t(x_t) + eps_t, advancing the noise stream by round index."""
    if not 1 <= t <= env.T:
        raise InputError(f"round {t} outside horizon [1, {env.T}]")
    if not 0 <= arm_index < env.domain.size:
        raise InputError(f"arm {arm_index} outside domain of size {env.domain.size}")
    return float(env.mean_rewards[t - 1, int(arm_index)]) + noise.draw(t, arm_index)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def make_abrupt_environment(
    T: int,
    breakpoints,
    domain: DomainGrid,
    spec: KernelSpec,
    M: int,
    seed: int,
    noise_R: float = 0.1,
    name: str = "abrupt",
) -> Environment:
    """Independent coefficient draws per phase over one shared center set."""
    rng = np.random.default_rng([int(seed), 101])
    grid = grid_kernel_matrix(domain, spec)
    centers = np.sort(rng.choice(domain.size, size=M, replace=False))
    phases = [
        sample_rkhs_function(M, domain, spec, rng, centers=centers, grid_matrix=grid)
        for _ in range(len(tuple(breakpoints)) + 1)
    ]
    schedule = abrupt_schedule(breakpoints, phases, T)
    realized = realized_budget(schedule)
    return Environment(
        name=name,
        domain=domain,
        spec=spec,
        T=T,
        noise_R=noise_R,
        mean_rewards=schedule_mean_rewards(schedule),
        schedule=schedule,
        budget=BudgetLedger(declared_B_T=realized, realized=realized),
        function_norm_bound=max(f.rkhs_norm for f in phases),
    )


def make_stationary_environment(
    T: int,
    domain: DomainGrid,
    spec: KernelSpec,
    M: int,
    seed: int,
    noise_R: float = 0.1,
    name: str = "stationary",
) -> Environment:
    return make_abrupt_environment(
        T, (), domain, spec, M, seed, noise_R=noise_R, name=name
    )


def make_slow_environment(
    T: int,
    domain: DomainGrid,
    spec: KernelSpec,
    M: int,
    seed: int,
    noise_R: float = 0.1,
    name: str = "slow",
) -> Environment:
    """Piecewise-linear drift across three anchors with shared centers.

    The declared budget is the telescoped anchor-to-anchor path length,
    which upper-bounds the realized per-step total (the schedule starts one
    step into the first segment).
    """
    rng = np.random.default_rng([int(seed), 202])
    grid = grid_kernel_matrix(domain, spec)
    centers = np.sort(rng.choice(domain.size, size=M, replace=False))
    anchors = [
        sample_rkhs_function(M, domain, spec, rng, centers=centers, grid_matrix=grid)
        for _ in range(3)
    ]
    schedule = slow_schedule(anchors, T)
    declared = function_distance(anchors[0], anchors[1]) + function_distance(
        anchors[1], anchors[2]
    )
    realized = realized_budget(schedule)
    norm_bound = max(f.rkhs_norm for f in anchors)
    return Environment(
        name=name,
        domain=domain,
        spec=spec,
        T=T,
        noise_R=noise_R,
        mean_rewards=schedule_mean_rewards(schedule),
        schedule=schedule,
        budget=BudgetLedger(declared_B_T=declared, realized=realized),
        function_norm_bound=norm_bound,
    )


def load_price_environment(path, fmt: str = "csv", noise_R: float = 0.0) -> Environment:
    """A tabular environment from a day-by-stock closing-price matrix.

    First row holds stock identifiers; each later row is one day of decimal
    prices, no gaps.  Rewards are the prices min-max normalized over the full
    matrix; the kernel is the normalized empirical covariance of the columns.
    """
    if fmt != "csv":
        raise IngestionError(f"unsupported price file format {fmt!r}")
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"price file not found: {path}")
    lines = path.read_text().strip().splitlines()
    if len(lines) < 2:
        raise IngestionError(f"price file {path} needs a header and at least one day")
    header = [h.strip() for h in lines[0].split(",")]
    n_stocks = len(header)
    if n_stocks < 1 or any(not h for h in header):
        raise IngestionError(f"price file {path}: empty stock identifier in header")
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != n_stocks:
            raise IngestionError(
                f"price file {path}: row {r} has {len(cells)} cells, expected {n_stocks}"
            )
        parsed = []
        for c_idx, cell in enumerate(cells, start=1):
            if cell == "":
                raise IngestionError(
                    f"price file {path}: missing value at row {r}, column {c_idx}"
                )
            try:
                parsed.append(float(cell))
            except ValueError:
                raise IngestionError(
                    f"price file {path}: non-numeric cell {cell!r} at row {r}, "
                    f"column {c_idx}"
                ) from None
        rows.append(parsed)
    prices = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(prices)):
        bad = np.argwhere(~np.isfinite(prices))[0]
        raise IngestionError(
            f"price file {path}: non-finite value at row {bad[0] + 2}, "
            f"column {bad[1] + 1}"
        )

    centered = prices - prices.mean(axis=0, keepdims=True)
    denom = max(prices.shape[0] - 1, 1)
    cov = centered.T @ centered / denom
    spec = KernelSpec.empirical_covariance(cov)

    lo, hi = float(prices.min()), float(prices.max())
    span = hi - lo
    rewards = np.zeros_like(prices) if span == 0.0 else (prices - lo) / span

    domain = DomainGrid.indexed(n_stocks)
    return Environment(
        name="prices",
        domain=domain,
        spec=spec,
        T=prices.shape[0],
        noise_R=noise_R,
        mean_rewards=rewards,
        function_norm_bound=1.0,
    )
