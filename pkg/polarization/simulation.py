"""
Synthetic polarized graphs, candidate pools and the node-addition experiments.

The two-block generator with planted hubs stands in for a real follower
graph of a polarized debate. On top of it we compare selection strategies
(RWC against the number of added nodes) and replay the added nodes losing
followers (RWC against the fraction of unfollowing users).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from .estimator import EXACT_NODE_LIMIT, Method, WalkConfig, measure_rwc
from .exceptions import ConfigurationError
from .graph_core import (
    Candidate,
    CandidatePool,
    DirectedGraph,
    PartitionLabeling,
    Side,
    add_candidates,
    sample_unfollowers,
)
from .selection import (
    DEFAULT_CANDIDATE_MULTIPLIER,
    AdditionPlan,
    choose_method,
    joint_curve,
    parallel_map,
    select_addition_plan,
    task_config,
)
from .utils import round_half_up

logger = logging.getLogger(__name__)

RANDOM_FIXED_DEGREE = 50
DEFAULT_FRACTIONS = tuple(round(0.1 * step, 1) for step in range(11))
DEFAULT_TRIALS = 5


class Strategy(str, Enum):
    POPULAR_AND_NEUTRAL = 'popular_and_neutral'
    POPULAR_ONLY = 'popular_only'
    RANDOM_FIXED = 'random_fixed'


@dataclass(frozen=True)
class PolarizedGraphParams:
    nodes_per_side: int
    p_in: float
    p_out: float
    hub_count: int = 10
    hub_in_degree_boost: int = 250
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ConfigurationError('expected 0 <= p_out <= p_in <= 1')
        if self.hub_count < 0:
            raise ConfigurationError('hub_count must be non-negative')
        if self.nodes_per_side <= self.hub_count:
            raise ConfigurationError('nodes_per_side must exceed hub_count')
        if self.hub_in_degree_boost < 0:
            raise ConfigurationError('hub_in_degree_boost must be non-negative')


@dataclass(frozen=True)
class DegreeDistribution:
    kind: str = 'fixed'
    value: int = RANDOM_FIXED_DEGREE
    low: int = 1
    high: int = 1

    def __post_init__(self):
        if self.kind == 'fixed':
            if self.value < 1:
                raise ConfigurationError('candidate degree must be at least 1')
        elif self.kind == 'uniform':
            if not 1 <= self.low <= self.high:
                raise ConfigurationError('uniform degree needs 1 <= low <= high')
        else:
            raise ConfigurationError(f'unknown degree distribution {self.kind!r}')

    @classmethod
    def fixed(cls, value: int) -> 'DegreeDistribution':
        return cls(kind='fixed', value=value)

    @classmethod
    def uniform(cls, low: int, high: int) -> 'DegreeDistribution':
        return cls(kind='uniform', low=low, high=high)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == 'fixed':
            return np.full(size, self.value, dtype=np.int64)
        return rng.integers(self.low, self.high + 1, size=size)

    @property
    def maximum(self) -> int:
        return self.value if self.kind == 'fixed' else self.high


@dataclass(frozen=True)
class NeutralityDistribution:
    kind: str = 'uniform'
    value: float = 0.5

    def __post_init__(self):
        if self.kind not in ('fixed', 'uniform'):
            raise ConfigurationError(f'unknown neutrality distribution {self.kind!r}')
        if self.kind == 'fixed' and not 0.0 <= self.value <= 0.5:
            raise ConfigurationError('neutrality must lie in [0, 0.5]')

    @classmethod
    def fixed(cls, value: float) -> 'NeutralityDistribution':
        return cls(kind='fixed', value=value)

    @classmethod
    def uniform(cls) -> 'NeutralityDistribution':
        return cls(kind='uniform')

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == 'fixed':
            return np.full(size, self.value, dtype=float)
        return rng.uniform(0.0, 0.5, size=size)


@dataclass(frozen=True)
class CandidatePoolParams:
    pool_size: int
    degree_distribution: DegreeDistribution = field(default_factory=lambda: DegreeDistribution.uniform(10, 150))
    neutrality_distribution: NeutralityDistribution = field(default_factory=NeutralityDistribution.uniform)
    seed: int = 0
    id_prefix: str = 'c'

    def __post_init__(self):
        if self.pool_size < 0:
            raise ConfigurationError('pool_size must be non-negative')


@dataclass
class UnfollowCurve:
    removal_fractions: List[float]
    rwc_values: List[float]
    min_values: List[float]
    max_values: List[float]
    baseline_rwc: float
    augmented_rwc: float
    trials: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'fraction': self.removal_fractions,
            'mean_rwc': self.rwc_values,
            'min_rwc': self.min_values,
            'max_rwc': self.max_values,
        })

    def reduction_at(self, fraction: float) -> float:
        """baseline - mean RWC at ``fraction``."""
        return self.baseline_rwc - self.rwc_values[self.removal_fractions.index(fraction)]


def generate_polarized_graph(params: PolarizedGraphParams) -> Tuple[DirectedGraph, PartitionLabeling]:
    """
    Two-block directed random graph with planted hubs.

    Nodes ``x0..`` form side X and ``y0..`` side Y. Every ordered pair gets an
    edge with probability p_in inside a side and p_out across. The first
    ``hub_count`` nodes of each side then gain ``hub_in_degree_boost`` extra
    same-side followers.
    """
    n = params.nodes_per_side
    block_model = nx.stochastic_block_model(
        [n, n],
        [[params.p_in, params.p_out], [params.p_out, params.p_in]],
        seed=params.seed,
        directed=True,
        selfloops=False,
    )
    edges = np.array(sorted(block_model.edges()), dtype=np.int64).reshape(-1, 2)
    sources, targets = [edges[:, 0]], [edges[:, 1]]

    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 1]))
    graph = DirectedGraph(2 * n, edges[:, 0], edges[:, 1])
    for offset in (0, n):
        for hub in range(offset, offset + params.hub_count):
            side_nodes = np.arange(offset, offset + n)
            eligible = np.setdiff1d(side_nodes, np.append(graph.in_neighbors(hub), hub))
            extra = rng.choice(eligible, size=min(params.hub_in_degree_boost, eligible.size), replace=False)
            sources.append(np.sort(extra))
            targets.append(np.full(extra.size, hub, dtype=np.int64))

    names = [f'x{i}' for i in range(n)] + [f'y{i}' for i in range(n)]
    graph = DirectedGraph(2 * n, np.concatenate(sources), np.concatenate(targets), external_ids=names)
    return graph, PartitionLabeling.from_sides(n, n)


def generate_candidate_pool(
    graph: DirectedGraph, labeling: PartitionLabeling, params: CandidatePoolParams
) -> CandidatePool:
    """
    Synthetic outside nodes with drawn degree and neutrality.

    A candidate of degree d and neutrality v gets round(v * d) followers on
    its minority side and the rest on the other; a seeded fair coin picks
    which side is the minority.
    """
    members = {side: labeling.members(side) for side in (Side.X, Side.Y)}
    rng = np.random.default_rng(params.seed)
    degrees = params.degree_distribution.draw(rng, params.pool_size)
    neutralities = params.neutrality_distribution.draw(rng, params.pool_size)
    coins = rng.integers(0, 2, size=params.pool_size)

    candidates = []
    for index in range(params.pool_size):
        degree = int(degrees[index])
        minority = round_half_up(neutralities[index] * degree)
        minority_side = Side.X if coins[index] == 0 else Side.Y
        counts = {minority_side: minority, minority_side.other: degree - minority}
        for side, count in counts.items():
            if count > members[side].size:
                raise ConfigurationError(
                    f'candidate degree {degree} needs {count} followers in {side.name}, '
                    f'which has {members[side].size} nodes'
                )
        followers_x = rng.choice(members[Side.X], size=counts[Side.X], replace=False)
        followers_y = rng.choice(members[Side.Y], size=counts[Side.Y], replace=False)
        external_id = f'{params.id_prefix}{index}'
        if graph.index_of(external_id) is not None:
            raise ConfigurationError(f'candidate id {external_id!r} collides with a graph node')
        candidates.append(Candidate(
            node=graph.node_count + index,
            external_id=external_id,
            followers=tuple(sorted(np.concatenate([followers_x, followers_y]).tolist())),
            followers_in_x=counts[Side.X],
            followers_in_y=counts[Side.Y],
        ))
    return CandidatePool(candidates)


def random_fixed_pool(graph: DirectedGraph, labeling: PartitionLabeling, size: int, seed) -> CandidatePool:
    """Degree-50 nodes following 25 random nodes of each side."""
    return generate_candidate_pool(graph, labeling, CandidatePoolParams(
        pool_size=size,
        degree_distribution=DegreeDistribution.fixed(RANDOM_FIXED_DEGREE),
        neutrality_distribution=NeutralityDistribution.fixed(0.5),
        seed=seed,
        id_prefix='random',
    ))


def popular_only_order(pool: CandidatePool) -> List[Candidate]:
    return sorted(pool, key=lambda candidate: (-candidate.in_degree, candidate.node))


def run_baseline_comparison(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    pool: CandidatePool,
    k_max: int,
    config: WalkConfig,
    strategies: Iterable[Strategy] = tuple(Strategy),
    candidate_multiplier: float = DEFAULT_CANDIDATE_MULTIPLIER,
    seed: int = 0,
    method=Method.AUTO,
    plan: Optional[AdditionPlan] = None,
    node_limit: int = EXACT_NODE_LIMIT,
) -> pd.DataFrame:
    """
    RWC of G plus each strategy's first k nodes, for k = 0..k_max.

    Returns a frame with columns ``strategy, k, rwc``; the k = 0 row of every
    strategy is RWC(G). A precomputed popular-and-neutral ``plan`` is reused
    when it was solved with the same method and covers k_max.
    """
    if k_max < 1:
        raise ConfigurationError('k_max must be at least 1')
    strategies = [Strategy(strategy) for strategy in strategies]
    method = choose_method(graph, k_max, method, node_limit)
    baseline = measure_rwc(graph, labeling, config, method, node_limit).rwc

    rows = []
    for strategy in strategies:
        if strategy is Strategy.POPULAR_AND_NEUTRAL:
            if plan is not None and plan.method != method.value:
                logger.info('Reselecting: plan was solved with %s, this comparison uses %s', plan.method, method.value)
                plan = None
            if plan is None or len(plan.selected) < min(k_max, len(pool)):
                plan = select_addition_plan(
                    graph, labeling, pool, k_max, candidate_multiplier, config, method, node_limit
                )
            curve = plan.cumulative_rwc[:k_max]
        elif strategy is Strategy.POPULAR_ONLY:
            curve = joint_curve(graph, labeling, popular_only_order(pool)[:k_max], config, method, node_limit)
        else:
            synthetic = random_fixed_pool(graph, labeling, k_max, seed)
            curve = joint_curve(graph, labeling, list(synthetic), config, method, node_limit)
        logger.info('Strategy %s: RWC %.4f -> %.4f', strategy.value, baseline, curve[-1] if curve else baseline)
        rows.append((strategy.value, 0, baseline))
        rows.extend((strategy.value, k, value) for k, value in enumerate(curve, start=1))
    return pd.DataFrame(rows, columns=['strategy', 'k', 'rwc'])


def run_unfollow_simulation(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    plan: AdditionPlan,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    trials: int = DEFAULT_TRIALS,
    config: WalkConfig = WalkConfig(),
    seed: int = 0,
    method=Method.AUTO,
    node_limit: int = EXACT_NODE_LIMIT,
) -> UnfollowCurve:
    """
    RWC after every added node independently loses a fraction of its followers.

    Each (fraction, trial) cell removes round(f * in_degree) incoming edges
    of each added node. Trial t draws the same follower order for every
    fraction, so removals are nested as f grows.
    """
    if not plan.selected:
        raise ConfigurationError('addition plan is empty')
    fractions = [float(fraction) for fraction in fractions]
    if 0.0 not in fractions:
        raise ConfigurationError('fractions must include 0')
    if any(not 0.0 <= fraction <= 1.0 for fraction in fractions):
        raise ConfigurationError('fractions must lie in [0, 1]')
    if trials < 1:
        raise ConfigurationError('trials must be at least 1')

    method = choose_method(graph, len(plan.selected), method, node_limit)
    augmented, augmented_labels = add_candidates(graph, labeling, plan.candidates())
    added = augmented.added_nodes[-len(plan.selected):]
    baseline = measure_rwc(graph, labeling, config, method, node_limit).rwc
    augmented_rwc = measure_rwc(augmented, augmented_labels, config, method, node_limit).rwc
    jobs = [(fraction, trial) for fraction in fractions for trial in range(trials)]
    inner = task_config(config, len(jobs))

    def cell(job: Tuple[float, int]) -> float:
        fraction, trial = job
        removals = {
            node: sample_unfollowers(augmented, node, fraction, np.random.SeedSequence([seed, trial, position]))
            for position, node in enumerate(added)
        }
        removals = {node: dropped for node, dropped in removals.items() if dropped.size}
        if not removals:
            return augmented_rwc
        thinned = augmented.without_in_edges(removals)
        return measure_rwc(thinned, augmented_labels, inner, method, node_limit).rwc

    values = np.array(parallel_map(cell, jobs, config.threads)).reshape(len(fractions), trials)

    means, lows, highs = [], [], []
    for row in values:
        low, high = float(row.min()), float(row.max())
        lows.append(low)
        highs.append(high)
        means.append(low if low == high else float(row.mean()))
    return UnfollowCurve(
        removal_fractions=fractions,
        rwc_values=means,
        min_values=lows,
        max_values=highs,
        baseline_rwc=baseline,
        augmented_rwc=augmented_rwc,
        trials=trials,
    )
