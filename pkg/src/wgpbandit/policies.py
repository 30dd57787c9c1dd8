"""Upper-confidence-bound policies over a discretized action set.

Four interaction strategies share one posterior engine:

* ``WGPUCB`` — discounted weights (eta < 1) over the full history;
* ``IGPUCB`` — the stationary baseline, literally the weighted path with
  eta = 1 so the reduction between the two is structural;
* ``RESTART`` — eta = 1 with the history discarded every H rounds;
* ``SLIDING_WINDOW`` — eta = 1 fitted on the most recent SW observations.

Each round the policy fits the posterior on its retained history, sets the
confidence width beta from the chosen information-gain source, and plays the
grid argmax of mean + beta * sd with ties broken by lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError, ProtocolError
from .kernels import DomainGrid, KernelSpec, grid_kernel_matrix
from .mig import (
    EigendecayParams,
    default_se_eigendecay,
    eigendecay_projection,
    empirical_double_weighted_mig,
    mig_universal_bound,
    mig_weight_bound,
)
from .wgp import BanditHistory, WeightedPosterior, WeightScheme, fit_weighted_posterior


class PolicyKind(Enum):
    WGPUCB = "wgpucb"
    IGPUCB = "igpucb"
    RESTART = "restart"
    SLIDING_WINDOW = "sliding_window"


class BetaMode(Enum):
    EMPIRICAL_MIG = "empirical"
    ANALYTIC_BOUND = "analytic"
    FIXED = "fixed"


@dataclass(frozen=True)
class GPParams:
    """Model constants entering the confidence width: function-norm bound B,
    sub-Gaussian noise scale R, ridge level lam, and failure probability
    delta."""

    B: float = 1.0
    R: float = 0.1
    lam: float = 1.0
    delta: float = 0.1

    def __post_init__(self):
        if self.B < 0:
            raise InputError("B must be nonnegative")
        if self.R < 0:
            raise InputError("R must be nonnegative")
        if self.lam <= 0:
            raise InputError("lam must be positive")
        if not 0.0 < self.delta < 1.0:
            raise InputError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class PolicyConfig:
    """One policy's kind-specific knobs plus shared GP constants.

    ``eta`` applies to WGPUCB, ``H`` to RESTART, ``SW`` to SLIDING_WINDOW.
    Tie-breaking is fixed: lowest index wins.
    """

    kind: PolicyKind
    gp: GPParams = GPParams()
    eta: float | None = None
    H: int | None = None
    SW: int | None = None
    beta_mode: BetaMode = BetaMode.EMPIRICAL_MIG
    fixed_beta: float | None = None
    truncation_eps: float = 1e-8
    name: str = ""

    def __post_init__(self):
        if self.kind is PolicyKind.WGPUCB:
            if self.eta is None or not 0.0 < self.eta <= 1.0:
                raise InputError("WGPUCB requires eta in (0, 1]")
        elif self.eta is not None:
            raise InputError(f"eta applies only to WGPUCB, not {self.kind.value}")
        if self.kind is PolicyKind.RESTART and (self.H is None or self.H < 1):
            raise InputError("RESTART requires H >= 1")
        if self.kind is PolicyKind.SLIDING_WINDOW and (self.SW is None or self.SW < 1):
            raise InputError("SLIDING_WINDOW requires SW >= 1")
        if self.beta_mode is BetaMode.FIXED:
            if self.fixed_beta is None or self.fixed_beta <= 0:
                raise InputError("FIXED beta mode requires fixed_beta > 0")
        if not self.name:
            object.__setattr__(self, "name", self.kind.value)

    @property
    def effective_eta(self) -> float:
        return self.eta if self.kind is PolicyKind.WGPUCB else 1.0

    def weight_scheme(self) -> WeightScheme:
        return WeightScheme(
            eta=self.effective_eta,
            lam=self.gp.lam,
            truncation_eps=self.truncation_eps,
        )


@dataclass(frozen=True)
class TuningOutput:
    """Horizon-driven parameter choices: discount eta, epoch length c, and
    quadrature density mbar."""

    eta: float
    c: int
    mbar: int


def beta_t(gp: GPParams, gamma_bar: float) -> float:
    """Confidence width B + (R/sqrt(lam)) * sqrt(2 log(1/delta) + 2 gamma)."""
    if gamma_bar < 0:
        raise InputError("gamma_bar must be nonnegative")
    return gp.B + (gp.R / math.sqrt(gp.lam)) * math.sqrt(
        2.0 * math.log(1.0 / gp.delta) + 2.0 * gamma_bar
    )


def select_action(
    posterior: WeightedPosterior, beta: float, domain: DomainGrid
) -> int:
    """argmax over the grid of mean + beta * sd; ties -> lowest index."""
    if domain.size == 0:
        raise InputError("domain is empty")
    if posterior.domain.size != domain.size:
        raise InputError("posterior and domain grids differ")
    ucb = posterior.grid_means + beta * posterior.grid_sds()
    return int(np.argmax(ucb))


def tune_parameters(
    T: int, gamma_dot: float, B_T: float | None = None
) -> TuningOutput:
    """Horizon-optimal discount plus the derived epoch length and quadrature
    density.

    eta = 1 - gamma_dot^{-1/4} sqrt(B_T / T) when the variation budget is
    known, 1 - gamma_dot^{-1/4} / sqrt(T) otherwise; clamped into
    [0.5, 1 - 1e-4].  c = ceil(ln T / (1 - eta));
    mbar = ceil(log_{4/e}(T^3 gamma_dot^{3/2})) clamped into [2, 12].
    """
    if T < 1:
        raise InputError("T must be >= 1")
    if gamma_dot <= 0:
        raise InputError("gamma_dot must be positive")
    if B_T is not None and B_T <= 0:
        raise InputError("B_T must be positive when supplied")
    if B_T is None:
        raw_eta = 1.0 - gamma_dot ** (-0.25) / math.sqrt(T)
    else:
        raw_eta = 1.0 - gamma_dot ** (-0.25) * math.sqrt(B_T) / math.sqrt(T)
    eta = min(max(raw_eta, 0.5), 1.0 - 1e-4)
    c = max(1, math.ceil(math.log(T) / (1.0 - eta)))
    raw_mbar = math.log(T**3 * gamma_dot**1.5) / math.log(4.0 / math.e)
    mbar = min(max(math.ceil(raw_mbar), 2), 12)
    return TuningOutput(eta=eta, c=c, mbar=mbar)


def order_wise_baselines(T: int, B_T: float) -> tuple[int, int]:
    """Theory-order restart period and window size H = SW = ceil((T/B_T)^{2/3})."""
    if T < 1 or B_T <= 0:
        raise InputError("T must be >= 1 and B_T positive")
    h = max(1, math.ceil((T / B_T) ** (2.0 / 3.0)))
    return h, h


# ---------------------------------------------------------------------------
# sequential interaction state
# ---------------------------------------------------------------------------


@dataclass
class PolicyState:
    """Single-owner mutable state for one episode of one policy."""

    config: PolicyConfig
    domain: DomainGrid
    spec: KernelSpec
    history: BanditHistory
    grid_matrix: np.ndarray = field(repr=False)
    next_round: int = 1
    last_arm: int | None = None
    posterior: WeightedPosterior | None = None
    last_beta: float = 0.0
    last_gamma: float = 0.0
    clamp_total: int = 0
    eigendecay: EigendecayParams | None = None


def new_policy_state(
    config: PolicyConfig,
    domain: DomainGrid,
    spec: KernelSpec,
    eigendecay: EigendecayParams | None = None,
) -> PolicyState:
    return PolicyState(
        config=config,
        domain=domain,
        spec=spec,
        history=BanditHistory.empty(domain),
        grid_matrix=grid_kernel_matrix(domain, spec),
        eigendecay=eigendecay,
    )


def policy_step(
    state: PolicyState, reward_feedback: float | None, round_: int
) -> tuple[int, PolicyState]:
    """Advance one round: absorb the previous reward, refit, act.

    Rounds must be presented in order, with the reward for round t-1
    supplied before the action for round t is requested.
    """
    if round_ != state.next_round:
        raise ProtocolError(
            f"expected round {state.next_round}, got {round_} (out of order)"
        )
    if round_ == 1:
        if reward_feedback is not None:
            raise ProtocolError("round 1 cannot carry feedback")
    elif reward_feedback is None:
        raise ProtocolError(f"round {round_} requires feedback for round {round_ - 1}")

    if reward_feedback is not None:
        state.history = state.history.append(
            state.last_arm, float(reward_feedback), round_ - 1
        )

    cfg = state.config
    if cfg.kind is PolicyKind.RESTART and (round_ - 1) % cfg.H == 0:
        state.history = BanditHistory.empty(state.domain)

    fit_history = state.history
    if cfg.kind is PolicyKind.SLIDING_WINDOW:
        fit_history = state.history.tail(cfg.SW)

    scheme = cfg.weight_scheme()
    posterior = fit_weighted_posterior(
        fit_history, scheme, state.spec, grid_matrix=state.grid_matrix
    )
    gamma = _gamma_for_beta(state, fit_history, scheme, round_)
    beta = cfg.fixed_beta if cfg.beta_mode is BetaMode.FIXED else beta_t(cfg.gp, gamma)
    arm = select_action(posterior, beta, state.domain)

    state.posterior = posterior
    state.last_beta = float(beta)
    state.last_gamma = float(gamma)
    state.clamp_total += posterior.clamp_warnings
    state.last_arm = arm
    state.next_round = round_ + 1
    return arm, state


def _gamma_for_beta(
    state: PolicyState,
    fit_history: BanditHistory,
    scheme: WeightScheme,
    round_: int,
) -> float:
    cfg = state.config
    if cfg.beta_mode is BetaMode.FIXED:
        return 0.0
    if cfg.beta_mode is BetaMode.EMPIRICAL_MIG:
        if len(fit_history) == 0:
            return 0.0
        arms = np.asarray(fit_history.arms, dtype=int)
        if state.spec.family.value == "squared_exponential":
            pts = state.domain.points[arms]
        else:
            pts = arms
        return empirical_double_weighted_mig(
            pts, scheme, state.spec, rounds=np.asarray(fit_history.rounds, dtype=float)
        )
    # analytic bound mode
    params = state.eigendecay or default_se_eigendecay()
    kdot = state.spec.kdot
    if scheme.eta < 1.0:
        n, delta = eigendecay_projection(params, scheme.eta, kdot=kdot, lam=scheme.lam)
        return mig_weight_bound(n, scheme.eta, kdot=kdot, lam=scheme.lam, delta_N=delta)
    horizon = max(1, round_ - 1)
    best = math.inf
    for n in range(1, 129):
        if params.kind.value == "exponential":
            delta = (params.C_e1 * params.psi**2 / params.C_e2) * math.exp(-params.C_e2 * n)
        else:
            delta = params.C_p * n ** (1.0 - params.beta_p) * params.psi**2 / (params.beta_p - 1.0)
        best = min(best, mig_universal_bound(n, horizon, kdot=kdot, lam=scheme.lam, delta_N=delta))
    return best
