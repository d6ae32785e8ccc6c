"""Schelling-diagram machinery and short-term payoff theory.

A Schelling diagram summarizes an N-player binary-choice game by two curves
indexed by the number of cooperators among the other N-1 players: the return
to cooperating and the return to defecting. The classifier reads the social
dilemma conditions off those curves. The payoff-line transforms show how
inequity penalties tilt a one-shot cooperate/defect tradeoff as the number
of cooperators in the population varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StatisticsError


@dataclass
class SchellingDiagram:
    """Return curves by number of cooperators among the other players.

    ``cooperator_returns[l]`` is the return to cooperating when l others
    cooperate (a population of l+1 cooperators); ``defector_returns[l]`` is
    the return to defecting when l others cooperate. Standard errors are
    present only for empirical diagrams.
    """
    n_players: int
    cooperator_returns: np.ndarray
    defector_returns: np.ndarray
    cooperator_stderr: np.ndarray | None = None
    defector_stderr: np.ndarray | None = None

    def __post_init__(self):
        self.cooperator_returns = np.asarray(self.cooperator_returns, dtype=np.float64)
        self.defector_returns = np.asarray(self.defector_returns, dtype=np.float64)
        shape = (self.n_players,)
        if self.cooperator_returns.shape != shape or self.defector_returns.shape != shape:
            raise ConfigError(f"both return curves must have shape {shape}")
        for name in ("cooperator_stderr", "defector_stderr"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=np.float64)
                if value.shape != shape:
                    raise ConfigError(f"{name} must have shape {shape}")
                setattr(self, name, value)

    @property
    def is_empirical(self) -> bool:
        return self.cooperator_stderr is not None and self.defector_stderr is not None


@dataclass
class SSDVerdict:
    """Dilemma classification with its individual condition flags."""
    is_ssd: bool
    mutual_cooperation_beats_defection: bool   # full-coop return > full-defect return
    cooperation_beats_exploitation: bool       # full-coop return > lone-cooperator return
    fear: bool                                 # defection preferred when few cooperate
    greed: bool                                # defection preferred when many cooperate
    inconclusive: bool = False                 # error bars overlap at a decision point


def matrix_schelling(payoff: np.ndarray) -> SchellingDiagram:
    """Diagram of a symmetric 2x2 game, rows/cols ordered (cooperate, defect)."""
    payoff = np.asarray(payoff, dtype=np.float64)
    if payoff.shape != (2, 2):
        raise ConfigError(f"payoff matrix must be 2x2, got {payoff.shape}")
    both_coop, exploited = payoff[0]
    tempted, both_defect = payoff[1]
    return SchellingDiagram(
        n_players=2,
        cooperator_returns=np.array([exploited, both_coop]),
        defector_returns=np.array([both_defect, tempted]),
    )


def load_matrix_payoffs(path) -> np.ndarray:
    """Read a symmetric 2x2 payoff matrix from a 4-number text file.

    The numbers are the row player's payoffs in (cooperate, defect) x
    (cooperate, defect) order: both-cooperate, exploited, temptation,
    both-defect. Lines starting with # are comments.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read payoff file {path}: {exc.strerror}") from exc
    tokens = [tok for line in text.splitlines()
              for tok in line.split("#", 1)[0].replace(",", " ").split()]
    if len(tokens) != 4:
        raise ConfigError(f"payoff file {path} must hold exactly 4 numbers, "
                          f"found {len(tokens)}")
    try:
        values = [float(tok) for tok in tokens]
    except ValueError as exc:
        raise ConfigError(f"payoff file {path}: {exc}") from exc
    return np.array(values, dtype=np.float64).reshape(2, 2)


def pure_nash_2x2(payoff: np.ndarray) -> set[tuple[str, str]]:
    """Pure-strategy equilibria of a symmetric 2x2 game as (row, col) profiles."""
    payoff = np.asarray(payoff, dtype=np.float64)
    if payoff.shape != (2, 2):
        raise ConfigError(f"payoff matrix must be 2x2, got {payoff.shape}")
    names = ("c", "d")
    equilibria = set()
    for row in range(2):
        for col in range(2):
            row_best = payoff[row, col] >= payoff[1 - row, col]
            col_best = payoff[col, row] >= payoff[1 - col, row]
            if row_best and col_best:
                equilibria.add((names[row], names[col]))
    return equilibria


def _band_size(n: int, band_fraction: float) -> int:
    if not 0.0 < band_fraction <= 0.5:
        raise ConfigError(f"band_fraction must be in (0, 0.5], got {band_fraction}")
    return max(1, math.ceil(n * band_fraction))


def classify_ssd(diagram: SchellingDiagram, band_fraction: float = 1 / 3) -> SSDVerdict:
    """Test the social dilemma conditions on a Schelling diagram.

    Fear and greed are checked over the lowest and highest ``band_fraction``
    of cooperation levels. With an empirical diagram, any decision comparison
    whose margin falls inside the summed standard errors marks the verdict
    inconclusive (flags still reflect the point estimates).
    """
    rc, rd = diagram.cooperator_returns, diagram.defector_returns
    n = diagram.n_players
    src = diagram.cooperator_stderr
    srd = diagram.defector_stderr
    shaky = []

    def beats(a, b, sa, sb):
        if diagram.is_empirical:
            shaky.append(abs(a - b) <= sa + sb)
        return bool(a > b)

    full_coop = rc[n - 1]
    cond1 = beats(full_coop, rd[0], src[n - 1] if src is not None else 0,
                  srd[0] if srd is not None else 0)
    cond2 = beats(full_coop, rc[0], src[n - 1] if src is not None else 0,
                  src[0] if src is not None else 0)
    band = _band_size(n, band_fraction)
    # comprehensions, not generators: every decision comparison must register
    # its margin even after the flag is already decided
    fear = all([beats(rd[i], rc[i], srd[i] if srd is not None else 0,
                      src[i] if src is not None else 0) for i in range(band)])
    greed = all([beats(rd[i], rc[i], srd[i] if srd is not None else 0,
                       src[i] if src is not None else 0)
                 for i in range(n - band, n)])
    return SSDVerdict(
        is_ssd=cond1 and cond2 and (fear or greed),
        mutual_cooperation_beats_defection=cond1,
        cooperation_beats_exploitation=cond2,
        fear=fear,
        greed=greed,
        inconclusive=any(shaky),
    )


def empirical_schelling(env, cooperator_factory, defector_factory, *,
                        episodes_per_point: int, seed: int = 0,
                        horizon: int | None = None) -> SchellingDiagram:
    """Measure a diagram by running every cooperator/defector split.

    For each split the first agents play scripted cooperator policies and the
    rest scripted defectors; per-role mean extrinsic returns are averaged
    over episodes. Factories build fresh policy objects exposing
    ``reset(env, agent_id)`` and ``act(env) -> Action``.
    """
    if episodes_per_point < 2:
        raise StatisticsError("need at least 2 episodes per point for standard errors")
    n = env.n_agents
    coop_samples = [[] for _ in range(n)]   # index: cooperators among others
    defect_samples = [[] for _ in range(n)]

    for n_coop in range(n + 1):
        for episode in range(episodes_per_point):
            policies = [cooperator_factory() if i < n_coop else defector_factory()
                        for i in range(n)]
            returns = _rollout(env, policies,
                               seed=seed + episode + n_coop * episodes_per_point,
                               horizon=horizon)
            if n_coop > 0:
                coop_samples[n_coop - 1].append(returns[:n_coop].mean())
            if n_coop < n:
                defect_samples[n_coop].append(returns[n_coop:].mean())

    def mean_and_stderr(samples):
        means = np.array([np.mean(s) for s in samples])
        errs = np.array([np.std(s, ddof=1) / math.sqrt(len(s)) for s in samples])
        return means, errs

    rc, rc_err = mean_and_stderr(coop_samples)
    rd, rd_err = mean_and_stderr(defect_samples)
    return SchellingDiagram(n_players=n, cooperator_returns=rc, defector_returns=rd,
                            cooperator_stderr=rc_err, defector_stderr=rd_err)


def _rollout(env, policies, seed: int, horizon: int | None) -> np.ndarray:
    """One scripted episode; returns per-agent extrinsic return."""
    env.reset(seed=seed)
    for agent_id, policy in enumerate(policies):
        policy.reset(env, agent_id)
    total = np.zeros(env.n_agents)
    steps = horizon if horizon is not None else env.config.episode_length
    for _ in range(steps):
        actions = [policy.act(env) for policy in policies]
        result = env.step(actions)
        total += result.extrinsic_rewards
        if result.done:
            break
    return total


# -- short-term payoff theory -------------------------------------------------

@dataclass
class ShortTermPayoffs:
    """One-shot cooperate/defect payoffs in an N-player population.

    The population average return when x players cooperate falls on the line
    from the all-defect payoff d (x=0) down to the all-cooperate payoff c
    (x=N).
    """
    cooperator_payoff: float
    defector_payoff: float
    n_players: int

    def __post_init__(self):
        if not self.defector_payoff > self.cooperator_payoff:
            raise ConfigError("short-term theory needs defector payoff > cooperator payoff")
        if self.n_players < 2:
            raise ConfigError("need at least two players")

    @property
    def gap(self) -> float:
        return self.defector_payoff - self.cooperator_payoff

    def average_return(self, cooperators) -> np.ndarray:
        """Population mean payoff as a function of the cooperator count."""
        x = np.asarray(cooperators, dtype=np.float64)
        return self.defector_payoff - self.gap * x / self.n_players


@dataclass
class PayoffLine:
    """A payoff as a linear function of the cooperator count."""
    slope: float
    intercept: float

    def __call__(self, cooperators):
        return self.slope * np.asarray(cooperators, dtype=np.float64) + self.intercept


@dataclass
class TransformedPayoffs:
    """Cooperator/defector payoff lines after an inequity transform."""
    cooperator_line: PayoffLine
    defector_line: PayoffLine
    crossing: float | None          # cooperator count where the lines meet
    crossing_interior: bool         # crossing strictly inside (0, N)


def guilt_transform(payoffs: ShortTermPayoffs, weight: float) -> TransformedPayoffs:
    """Penalize defectors for their advantage over the population average.

    Defectors sit above the average-return line, so a guilt weight w charges
    them w times that surplus; cooperators sit below it and are untouched.
    Past the crossing point, cooperation pays more than defection.
    """
    if weight < 0:
        raise ConfigError(f"guilt weight must be >= 0, got {weight}")
    c, d, n = payoffs.cooperator_payoff, payoffs.defector_payoff, payoffs.n_players
    cooperator = PayoffLine(0.0, c)
    defector = PayoffLine(-weight * payoffs.gap / n, d)
    if weight == 0:
        return TransformedPayoffs(cooperator, defector, None, False)
    crossing = n / weight
    return TransformedPayoffs(cooperator, defector, crossing, 0 < crossing < n)


def envy_transform(payoffs: ShortTermPayoffs, cooperator_weight: float,
                   defector_weight: float) -> TransformedPayoffs:
    """Penalize everyone for the shortfall of cooperators below the average.

    Both roles are charged proportionally to how far the cooperator payoff
    falls below the population average; defectors carry the larger weight
    (they are the natural targets), so their line tilts down faster and can
    cross below the cooperator line at high cooperation levels.
    """
    if not defector_weight > cooperator_weight > 0:
        raise ConfigError("need defector_weight > cooperator_weight > 0")
    c, d, n = payoffs.cooperator_payoff, payoffs.defector_payoff, payoffs.n_players
    # shortfall(x) = average(x) - c = gap * (1 - x/N); charged to both lines
    cooperator = PayoffLine(cooperator_weight * payoffs.gap / n,
                            c - cooperator_weight * payoffs.gap)
    defector = PayoffLine(defector_weight * payoffs.gap / n,
                          d - defector_weight * payoffs.gap)
    crossing = n * (1.0 - 1.0 / (defector_weight - cooperator_weight))
    return TransformedPayoffs(cooperator, defector, crossing, 0 < crossing < n)


def schelling_csv_rows(diagram: SchellingDiagram) -> list[dict]:
    """Diagram as CSV-ready dicts, one row per cooperation level."""
    rows = []
    for level in range(diagram.n_players):
        row = {
            "others_cooperating": level,
            "cooperators_including_self": level + 1,
            "cooperator_return": diagram.cooperator_returns[level],
            "defector_return": diagram.defector_returns[level],
        }
        if diagram.is_empirical:
            row["cooperator_stderr"] = diagram.cooperator_stderr[level]
            row["defector_stderr"] = diagram.defector_stderr[level]
        rows.append(row)
    return rows
