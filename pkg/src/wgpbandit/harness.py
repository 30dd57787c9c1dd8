"""Experiment orchestration: config files, seeded runs, regret tables, CLI.

An experiment is a plain-text config (section headers, ``key = value``
lines) naming one environment and one or more policies.  Every policy is
replayed against every seed with common random numbers, per-policy
row-per-round tables and one aggregate table are written as comma-separated
text with floats at 9 significant digits, and the whole pipeline is
deterministic: identical config plus seeds produce byte-identical files.

The module doubles as the command-line entry point (``wgpbandit``), with
subcommands ``run``, ``bound``, ``tune``, and ``check``.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .envs import (
    Environment,
    load_price_environment,
    make_abrupt_environment,
    make_slow_environment,
    make_stationary_environment,
    observe,
)
from .errors import ConfigurationError, IngestionError, InputError, NumericalError
from .kernels import DomainGrid, KernelSpec
from .mig import (
    EigendecayParams,
    default_se_eigendecay,
    eigendecay_projection,
    empirical_double_weighted_mig,
    mig_eigendecay_bound,
    mig_universal_bound,
    mig_weight_bound,
)
from .policies import (
    BetaMode,
    GPParams,
    PolicyConfig,
    PolicyKind,
    new_policy_state,
    order_wise_baselines,
    policy_step,
    tune_parameters,
)

CSV_HEADER = "seed,policy,t,arm,reward,instant_regret,cum_regret,beta,sigma,clamps"
AGGREGATE_HEADER = "t,policy,mean_cum_regret,stderr"

_ENV_KINDS = ("abrupt", "slow", "stationary", "prices")
_NAME_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-")


def _fmt(x: float) -> str:
    """Canonical float rendering: 9 significant digits."""
    return f"{float(x):.9g}"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs, fully resolved.

    Policies are complete :class:`PolicyConfig` entries (auto-tuned values
    already substituted); their GP constants are patched from the ``gp_*``
    fields once the environment — and hence the exact function-norm bound —
    exists.  ``gp_B = None`` means "use the sampled function's norm".
    """

    env_kind: str
    T: int
    replicates: int
    policies: tuple[PolicyConfig, ...]
    out_dir: str = "results"
    base_seed: int = 0
    env_seed: int = 7
    seed_policy: str = "redraw"
    grid_size: int = 100
    lengthscale: float = 0.2
    M: int = 100
    noise_R: float = 0.1
    breakpoints: tuple[int, ...] = (100, 200)
    B_T: float | None = None
    price_file: str | None = None
    gp_B: float | None = None
    gp_R: float = 0.1
    gp_lam: float = 1.0
    gp_delta: float = 0.1
    tuning_mode: str = "manual"
    gamma_dot: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.env_kind not in _ENV_KINDS:
            raise ConfigurationError(
                f"environment kind must be one of {_ENV_KINDS}, got {self.env_kind!r}"
            )
        if self.T < 1:
            raise ConfigurationError("T must be >= 1")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if not self.policies:
            raise ConfigurationError("at least one policy is required")
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"policy names must be unique, got {names}")
        for n in names:
            if not n or not set(n) <= _NAME_OK:
                raise ConfigurationError(
                    f"policy name {n!r} is not filesystem-safe"
                )
        if self.env_kind == "prices" and not self.price_file:
            raise ConfigurationError("kind = prices requires price_file")
        if self.seed_policy not in ("redraw", "fixed"):
            raise ConfigurationError(
                f"seed_policy must be 'redraw' or 'fixed', got {self.seed_policy!r}"
            )
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.tuning_mode not in ("manual", "auto"):
            raise ConfigurationError(
                f"tuning mode must be 'manual' or 'auto', got {self.tuning_mode!r}"
            )

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.base_seed + i for i in range(self.replicates))


DEFAULT_CONFIG = """\
[experiment]
T = 500
replicates = 20
base_seed = 0
out_dir = results
workers = 1

[environment]
# kind: abrupt | slow | stationary | prices
kind = abrupt
grid_size = 100
lengthscale = 0.2
M = 100
noise_R = 0.1
# seed_policy redraw: each replicate draws its own reward functions
# (independent experiments); fixed: one environment from env_seed, with
# only the noise varying across replicates.
seed_policy = redraw
env_seed = 7
breakpoints = 100, 200
# B_T = 8.0         declared variation budget; default: the realized total
# price_file = prices.csv   required when kind = prices

[gp]
# assumed norm bound in the confidence width; set B = auto to use the
# exact norm of the sampled reward functions instead
B = 1.0
R = 0.1
lambda = 1.0
delta = 0.1

[tuning]
# manual: use the values below; auto: fill missing eta/H/SW from the
# horizon, gamma_dot, and B_T
mode = manual
gamma_dot = 1.0

# eta, H, SW below are horizon-tuned for T = 500: eta from the discount
# rule with the measured stationary gain, H = SW order-wise from the
# typical realized variation.
[policy.wgpucb]
kind = wgpucb
eta = 0.98
beta_mode = empirical

[policy.igpucb]
kind = igpucb

[policy.rgpucb]
kind = restart
H = 10

[policy.swgpucb]
kind = sliding_window
SW = 10
"""


def default_config_text() -> str:
    """The config printed by ``run --print-defaults``; parses to defaults."""
    return DEFAULT_CONFIG


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse a config document into a resolved :class:`ExperimentConfig`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config {source}: {exc}") from None

    get = _SectionReader(parser, source)
    T = get.int("experiment", "t", required=True)
    replicates = get.int("experiment", "replicates", 1)
    base_seed = get.int("experiment", "base_seed", 0)
    out_dir = get.str("experiment", "out_dir", "results")
    workers = get.int("experiment", "workers", 1)

    env_kind = get.str("environment", "kind", required=True)
    grid_size = get.int("environment", "grid_size", 100)
    lengthscale = get.float("environment", "lengthscale", 0.2)
    M = get.int("environment", "m", 100)
    noise_R = get.float("environment", "noise_r", 0.1)
    seed_policy = get.str("environment", "seed_policy", "redraw")
    env_seed = get.int("environment", "env_seed", 7)
    breakpoints = get.int_list("environment", "breakpoints", (100, 200))
    B_T = get.float("environment", "b_t", None)
    price_file = get.str("environment", "price_file", None)

    raw_B = get.str("gp", "b", "auto")
    gp_B = None if raw_B.lower() == "auto" else _parse_float(raw_B, "gp.B", source)
    gp_R = get.float("gp", "r", 0.1)
    gp_lam = get.float("gp", "lambda", 1.0)
    gp_delta = get.float("gp", "delta", 0.1)

    tuning_mode = get.str("tuning", "mode", "manual")
    gamma_dot = get.float("tuning", "gamma_dot", 1.0)

    policies = []
    for section in parser.sections():
        if not section.startswith("policy."):
            continue
        name = section[len("policy."):]
        policies.append(
            _parse_policy(get, section, name, T, B_T, tuning_mode, gamma_dot)
        )
    if not policies:
        raise ConfigurationError(f"{source}: no [policy.<name>] sections found")

    return ExperimentConfig(
        env_kind=env_kind,
        T=T,
        replicates=replicates,
        policies=tuple(policies),
        out_dir=out_dir,
        base_seed=base_seed,
        env_seed=env_seed,
        seed_policy=seed_policy,
        grid_size=grid_size,
        lengthscale=lengthscale,
        M=M,
        noise_R=noise_R,
        breakpoints=breakpoints,
        B_T=B_T,
        price_file=price_file,
        gp_B=gp_B,
        gp_R=gp_R,
        gp_lam=gp_lam,
        gp_delta=gp_delta,
        tuning_mode=tuning_mode,
        gamma_dot=gamma_dot,
        workers=workers,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), source=str(path))


class _SectionReader:
    """Typed access to configparser values with error messages naming the
    config location."""

    def __init__(self, parser: configparser.ConfigParser, source: str):
        self._p = parser
        self._source = source

    def str(self, section, key, default=None, required=False):
        if not self._p.has_option(section, key):
            if required:
                raise ConfigurationError(
                    f"{self._source}: missing required key {key!r} in [{section}]"
                )
            return default
        return self._p.get(section, key).strip()

    def int(self, section, key, default=None, required=False):
        raw = self.str(section, key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(
                f"{self._source}: [{section}] {key} must be an integer, got {raw!r}"
            ) from None

    def float(self, section, key, default=None, required=False):
        raw = self.str(section, key, None, required)
        if raw is None:
            return default
        return _parse_float(raw, f"[{section}] {key}", self._source)

    def int_list(self, section, key, default=()):
        raw = self.str(section, key, None)
        if raw is None:
            return tuple(default)
        if not raw:
            return ()
        try:
            return tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ConfigurationError(
                f"{self._source}: [{section}] {key} must be comma-separated "
                f"integers, got {raw!r}"
            ) from None


def _parse_float(raw: str, where: str, source: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(
            f"{source}: {where} must be a number, got {raw!r}"
        ) from None


def _parse_policy(
    get: _SectionReader,
    section: str,
    name: str,
    T: int,
    B_T: float | None,
    tuning_mode: str,
    gamma_dot: float,
) -> PolicyConfig:
    kind_raw = get.str(section, "kind", required=True)
    try:
        kind = PolicyKind(kind_raw)
    except ValueError:
        raise ConfigurationError(
            f"[{section}]: unknown policy kind {kind_raw!r} "
            f"(expected one of {[k.value for k in PolicyKind]})"
        ) from None

    eta = get.float(section, "eta", None)
    H = get.int(section, "h", None)
    SW = get.int(section, "sw", None)
    mode_raw = get.str(section, "beta_mode", BetaMode.EMPIRICAL_MIG.value)
    try:
        beta_mode = BetaMode(mode_raw)
    except ValueError:
        raise ConfigurationError(
            f"[{section}]: unknown beta_mode {mode_raw!r} "
            f"(expected one of {[m.value for m in BetaMode]})"
        ) from None
    fixed_beta = get.float(section, "fixed_beta", None)

    auto = tuning_mode == "auto"
    if kind is PolicyKind.WGPUCB and eta is None:
        if not auto:
            raise ConfigurationError(
                f"[{section}]: wgpucb needs eta (or tuning mode = auto)"
            )
        eta = tune_parameters(T, gamma_dot, B_T).eta
    if kind is PolicyKind.RESTART and H is None:
        H = _auto_window(section, T, B_T, auto)
    if kind is PolicyKind.SLIDING_WINDOW and SW is None:
        SW = _auto_window(section, T, B_T, auto)

    try:
        return PolicyConfig(
            kind=kind,
            eta=eta,
            H=H,
            SW=SW,
            beta_mode=beta_mode,
            fixed_beta=fixed_beta,
            name=name,
        )
    except InputError as exc:
        raise ConfigurationError(f"[{section}]: {exc}") from None


def _auto_window(section: str, T: int, B_T: float | None, auto: bool) -> int:
    if not auto:
        raise ConfigurationError(
            f"[{section}]: window length required (or tuning mode = auto)"
        )
    if B_T is None:
        raise ConfigurationError(
            f"[{section}]: auto window tuning needs B_T in [environment]"
        )
    return order_wise_baselines(T, B_T)[0]


# ---------------------------------------------------------------------------
# environment construction
# ---------------------------------------------------------------------------


def build_environment(config: ExperimentConfig, seed: int | None = None) -> Environment:
    """Materialize the configured environment.

    ``seed`` overrides the config's env_seed (one independent draw per
    replicate under the redraw seed policy); price data ignores it.
    """
    if config.env_kind == "prices":
        return load_price_environment(config.price_file, noise_R=config.noise_R)
    domain = DomainGrid.uniform(config.grid_size)
    spec = KernelSpec.squared_exponential(config.lengthscale)
    common = dict(
        T=config.T,
        domain=domain,
        spec=spec,
        M=config.M,
        seed=config.env_seed if seed is None else seed,
        noise_R=config.noise_R,
    )
    if config.env_kind == "abrupt":
        env = make_abrupt_environment(breakpoints=config.breakpoints, **common)
    elif config.env_kind == "slow":
        env = make_slow_environment(**common)
    else:
        env = make_stationary_environment(**common)
    if config.B_T is not None:
        if env.budget.realized > config.B_T + 1e-9:
            raise ConfigurationError(
                f"declared B_T = {config.B_T:g} is below the schedule's "
                f"realized variation {env.budget.realized:g}"
            )
        env = replace(
            env, budget=replace(env.budget, declared_B_T=float(config.B_T))
        )
    return env


def resolve_gp(config: ExperimentConfig, env: Environment) -> GPParams:
    B = config.gp_B if config.gp_B is not None else env.function_norm_bound
    return GPParams(B=B, R=config.gp_R, lam=config.gp_lam, delta=config.gp_delta)


# ---------------------------------------------------------------------------
# episodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpisodeRecord:
    """One policy on one seed: per-round arrays, prefix-summed regret.

    ``mean_estimate`` and ``true_mean`` support coverage diagnostics and are
    not part of the CSV schema.
    """

    seed: int
    policy: str
    t: np.ndarray = field(repr=False)
    arm: np.ndarray = field(repr=False)
    reward: np.ndarray = field(repr=False)
    instant_regret: np.ndarray = field(repr=False)
    cum_regret: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    clamps: np.ndarray = field(repr=False)
    mean_estimate: np.ndarray = field(repr=False)
    true_mean: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = len(self.t)
        for name in ("arm", "reward", "instant_regret", "cum_regret", "beta",
                     "sigma", "clamps", "mean_estimate", "true_mean"):
            if len(getattr(self, name)) != n:
                raise InputError(f"episode column {name} has wrong length")
        if n and np.min(self.instant_regret) < 0:
            raise InputError("instant regret must be nonnegative")
        if not np.allclose(np.cumsum(self.instant_regret), self.cum_regret,
                           rtol=0.0, atol=1e-9):
            raise InputError("cum_regret is not the prefix sum of instant_regret")

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        """CSV-schema tuples, one per round."""
        for i in range(len(self.t)):
            yield (
                self.seed,
                self.policy,
                int(self.t[i]),
                int(self.arm[i]),
                float(self.reward[i]),
                float(self.instant_regret[i]),
                float(self.cum_regret[i]),
                float(self.beta[i]),
                float(self.sigma[i]),
                int(self.clamps[i]),
            )


def run_episode(
    env: Environment,
    policy_config: PolicyConfig,
    seed: int,
    eigendecay: EigendecayParams | None = None,
) -> EpisodeRecord:
    """Play one policy for T rounds against one noise seed.

    The benchmark each round is the exact grid argmax of the current mean
    reward, so the per-round regret is exact and nonnegative.  Numerical
    failures are re-raised with the failing round attached.
    """
    T = env.T
    noise = env.noise_model(seed)
    state = new_policy_state(policy_config, env.domain, env.spec, eigendecay)

    arm = np.zeros(T, dtype=int)
    reward = np.zeros(T)
    instant = np.zeros(T)
    beta = np.zeros(T)
    sigma = np.zeros(T)
    clamps = np.zeros(T, dtype=int)
    mean_est = np.zeros(T)
    true_mean = np.zeros(T)

    feedback: float | None = None
    for t in range(1, T + 1):
        try:
            a, state = policy_step(state, feedback, t)
        except NumericalError as exc:
            exc.details.setdefault("round", t)
            raise
        y = observe(env, t, a, noise)
        _, best_value = env.best_arm(t)
        i = t - 1
        arm[i] = a
        reward[i] = y
        true_mean[i] = env.mean_rewards[i, a]
        instant[i] = best_value - true_mean[i]
        beta[i] = state.last_beta
        sigma[i] = float(state.posterior.grid_sds()[a])
        clamps[i] = state.posterior.clamp_warnings
        mean_est[i] = float(state.posterior.grid_means[a])
        feedback = y

    return EpisodeRecord(
        seed=int(seed),
        policy=policy_config.name,
        t=np.arange(1, T + 1),
        arm=arm,
        reward=reward,
        instant_regret=instant,
        cum_regret=np.cumsum(instant),
        beta=beta,
        sigma=sigma,
        clamps=clamps,
        mean_estimate=mean_est,
        true_mean=true_mean,
    )


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentResult:
    out_dir: Path
    policy_files: dict
    aggregate_file: Path
    records: tuple[EpisodeRecord, ...]


def _episode_job(args) -> EpisodeRecord:
    env, policy, seed = args
    return run_episode(env, policy, seed)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """All policies x all seeds, then per-policy and aggregate tables.

    Within a seed every policy sees the same environment draw and the same
    noise stream (common random numbers); under seed_policy=redraw each seed
    gets an independent environment.  Fan-out across workers is allowed
    because episodes share no mutable state; the merge is
    (policy, seed)-deterministic either way.
    """
    out_dir = Path(config.out_dir)
    _ensure_writable(out_dir)

    redraw = config.seed_policy == "redraw" and config.env_kind != "prices"
    if redraw:
        envs = {s: build_environment(config, seed=s) for s in config.seeds}
    else:
        shared = build_environment(config)
        envs = {s: shared for s in config.seeds}

    jobs = [
        (envs[s], replace(p, gp=resolve_gp(config, envs[s])), s)
        for p in config.policies
        for s in config.seeds
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = tuple(pool.map(_episode_job, jobs))
    else:
        records = tuple(_episode_job(j) for j in jobs)

    policy_files = {}
    for p in config.policies:
        path = out_dir / f"{p.name}.csv"
        mine = sorted(
            (r for r in records if r.policy == p.name), key=lambda r: r.seed
        )
        _write_policy_table(path, mine)
        policy_files[p.name] = path

    aggregate_file = out_dir / "aggregate.csv"
    _write_aggregate(aggregate_file, records)

    return ExperimentResult(
        out_dir=out_dir,
        policy_files=policy_files,
        aggregate_file=aggregate_file,
        records=records,
    )


def _ensure_writable(out_dir: Path) -> None:
    """Fail before any computation if results cannot land on disk."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IngestionError(
            f"output directory {out_dir} is not writable: {exc}"
        ) from None


def _write_policy_table(path: Path, episodes) -> None:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for record in episodes:  # already seed-sorted; rows are t-sorted
        for (seed, policy, t, a, y, ir, cr, b, sd, cl) in record.rows():
            buf.write(
                f"{seed},{policy},{t},{a},{_fmt(y)},{_fmt(ir)},"
                f"{_fmt(cr)},{_fmt(b)},{_fmt(sd)},{cl}\n"
            )
    path.write_text(buf.getvalue())


def aggregate_records(records) -> list[tuple[int, str, float, float]]:
    """(t, policy, mean cum regret, stderr) rows sorted by (policy, t).

    stderr is the sample standard deviation over seeds divided by the square
    root of the seed count (0 when only one seed ran).
    """
    by_policy: dict = {}
    for r in records:
        by_policy.setdefault(r.policy, []).append(r)
    rows = []
    for policy in sorted(by_policy):
        eps = by_policy[policy]
        stack = np.stack([e.cum_regret for e in eps])  # (seeds, T)
        means = stack.mean(axis=0)
        if stack.shape[0] > 1:
            stderr = stack.std(axis=0, ddof=1) / math.sqrt(stack.shape[0])
        else:
            stderr = np.zeros(stack.shape[1])
        for i, t in enumerate(eps[0].t):
            rows.append((int(t), policy, float(means[i]), float(stderr[i])))
    return rows


def _write_aggregate(path: Path, records) -> None:
    buf = io.StringIO()
    buf.write(AGGREGATE_HEADER + "\n")
    for t, policy, mean, err in aggregate_records(records):
        buf.write(f"{t},{policy},{_fmt(mean)},{_fmt(err)}\n")
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# command-line interface
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgpbandit",
        description="Weighted GP bandit experiments, bounds, and tuning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", nargs="?", help="path to a config file")
    p_run.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the default config and exit",
    )

    p_bound = sub.add_parser("bound", help="print an information-gain bound")
    p_bound.add_argument(
        "--kind",
        choices=("universal", "weight", "eigendecay"),
        required=True,
    )
    p_bound.add_argument("--N", type=int, default=1)
    p_bound.add_argument("--T", type=int, default=1)
    p_bound.add_argument("--kdot", type=float, default=1.0)
    p_bound.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_bound.add_argument("--eta", type=float, default=None)
    p_bound.add_argument(
        "--eta2", type=float, default=None, help="eta squared (double-weight form)"
    )
    p_bound.add_argument("--deltaN", type=float, default=0.0)
    p_bound.add_argument(
        "--single",
        action="store_true",
        help="single-weighted denominator 1 - eta instead of 1 - eta^2",
    )
    p_bound.add_argument(
        "--decay", choices=("polynomial", "exponential"), default="exponential"
    )
    p_bound.add_argument("--Cp", type=float, default=1.0)
    p_bound.add_argument("--betap", type=float, default=2.0)
    p_bound.add_argument("--Ce1", type=float, default=1.0)
    p_bound.add_argument("--Ce2", type=float, default=1.0)
    p_bound.add_argument("--psi", type=float, default=1.0)

    p_tune = sub.add_parser("tune", help="print horizon-tuned parameters")
    p_tune.add_argument("--T", type=int, required=True)
    p_tune.add_argument("--gammadot", type=float, required=True)
    p_tune.add_argument("--BT", type=float, default=None)

    sub.add_parser("check", help="run the invariant suite on small instances")
    return parser


def _resolve_eta(args) -> float:
    if (args.eta is None) == (args.eta2 is None):
        raise InputError("provide exactly one of --eta or --eta2")
    if args.eta is not None:
        return args.eta
    if not 0.0 < args.eta2 <= 1.0:
        raise InputError("--eta2 must lie in (0, 1]")
    return math.sqrt(args.eta2)


def _cmd_bound(args) -> int:
    if args.kind == "universal":
        value = mig_universal_bound(
            args.N, args.T, kdot=args.kdot, lam=args.lam, delta_N=args.deltaN
        )
    elif args.kind == "weight":
        value = mig_weight_bound(
            args.N,
            _resolve_eta(args),
            kdot=args.kdot,
            lam=args.lam,
            delta_N=args.deltaN,
            double=not args.single,
        )
    else:
        if args.decay == "polynomial":
            params = EigendecayParams.polynomial(args.Cp, args.betap, args.psi, N=1)
        else:
            params = EigendecayParams.exponential(args.Ce1, args.Ce2, args.psi, N=1)
        value = mig_eigendecay_bound(
            params, _resolve_eta(args), kdot=args.kdot, lam=args.lam
        )
    print(f"{value:.6g}")
    return 0


def _cmd_tune(args) -> int:
    out = tune_parameters(args.T, args.gammadot, args.BT)
    print(f"eta = {out.eta:.6g}")
    print(f"c = {out.c}")
    print(f"mbar = {out.mbar}")
    return 0


def _cmd_run(args) -> int:
    if args.print_defaults:
        print(default_config_text(), end="")
        return 0
    if not args.config:
        raise InputError("run needs a config file (or --print-defaults)")
    config = load_config(args.config)
    result = run_experiment(config)
    for name in sorted(result.policy_files):
        path = result.policy_files[name]
        n_rows = sum(len(r) for r in result.records if r.policy == name)
        print(f"wrote {path} ({n_rows} rows)")
    agg_rows = len(aggregate_records(result.records))
    print(f"wrote {result.aggregate_file} ({agg_rows} rows)")
    return 0


def _cmd_check(args) -> int:
    """Small-instance invariant battery; any failure exits as numerical."""
    from .qff import build_qff, qff_error_bound, qff_feature_matrix
    from .wgp import (
        BanditHistory,
        WeightScheme,
        fit_qff_posterior,
        fit_weighted_posterior,
        posterior_scale_invariance_check,
    )

    failures = []

    def report(label: str, ok: bool, detail: str = ""):
        if ok:
            print(f"ok - {label}")
        else:
            failures.append(label)
            print(f"FAIL - {label}{': ' + detail if detail else ''}")

    rng = np.random.default_rng(20260819)
    domain = DomainGrid.uniform(25)
    spec = KernelSpec.squared_exponential(0.2)

    history = BanditHistory.empty(domain)
    for t in range(1, 13):
        history = history.append(int(rng.integers(25)), float(rng.normal()), t)
    scheme = WeightScheme(eta=0.9, lam=1.0)

    ok = posterior_scale_invariance_check(history, scheme, spec, c=10.0)
    report("posterior scale invariance (c = 10)", ok)

    qmap = build_qff(mbar=6, dimension=1, lengthscale=0.5)
    primal = fit_qff_posterior(history, scheme, qmap, form="primal")
    dual = fit_qff_posterior(history, scheme, qmap, form="dual")
    gap = max(
        float(np.max(np.abs(primal.grid_means - dual.grid_means))),
        float(np.max(np.abs(primal.grid_vars - dual.grid_vars))),
    )
    report("QFF primal/dual agreement", gap < 1e-8, f"gap {gap:g}")

    exact = np.exp(
        -((domain.points - domain.points[:, 0][None, :]) ** 2) / (2 * 0.5**2)
    )
    feats = qff_feature_matrix(qmap, domain.points)
    approx = feats @ feats.T
    sup_err = float(np.max(np.abs(exact - approx)))
    bound = qff_error_bound(6, 1, 0.5)
    report("QFF uniform error within bound", sup_err <= bound,
           f"sup {sup_err:g} vs bound {bound:g}")

    g_emp = empirical_double_weighted_mig(
        domain.points[np.asarray(history.arms)], scheme, spec,
        rounds=np.asarray(history.rounds, dtype=float),
    )
    n_proj, d_proj = eigendecay_projection(default_se_eigendecay(), 0.9)
    g_bound = mig_weight_bound(n_proj, 0.9, delta_N=d_proj)
    report("empirical gain within weight bound", g_emp <= g_bound,
           f"{g_emp:g} vs {g_bound:g}")

    post = fit_weighted_posterior(history, scheme, spec)
    sds = post.grid_sds()
    report(
        "posterior variance within prior cap",
        bool(np.all(post.grid_vars <= spec.variance_cap / scheme.lam + 1e-12)),
    )
    report("posterior sds finite", bool(np.all(np.isfinite(sds))))

    if failures:
        raise NumericalError(f"{len(failures)} invariant(s) failed: {failures}")
    return 0


def cli(argv=None) -> int:
    """Parse arguments and dispatch; returns a process exit code.

    0 = success, 1 = input/configuration error, 2 = numerical error.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bound":
            return _cmd_bound(args)
        if args.command == "tune":
            return _cmd_tune(args)
        return _cmd_check(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli())
