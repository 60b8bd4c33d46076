"""
Random Walk Controversy (RWC) score of a two-sided graph.

A walk starts at a uniformly chosen node of one side and stops at the first
hub (a top in-degree node of either side) it reaches. With P_AB the share of
walks started in A that stop at a hub of B,

    RWC = P_XX * P_YY - P_XY * P_YX

Two estimators are provided: Monte Carlo simulation (``estimate_rwc``) and an
exact absorbing-Markov-chain solve for small graphs (``exact_rwc``).
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from scipy import sparse

from .exceptions import (
    ConfigurationError,
    DegeneratePartitionError,
    EstimationFailedError,
    ExactSolverError,
    ExactSolverLimitError,
)
from .graph_core import DirectedGraph, EdgeMode, PartitionLabeling, Side

logger = logging.getLogger(__name__)

DEFAULT_WALKS_PER_SIDE = 10_000
DEFAULT_HUB_COUNT = 10
EXACT_NODE_LIMIT = 2000
# Walks are simulated in blocks of this many; each block owns a random stream.
WALK_BLOCK_SIZE = 2048

_ENDED_IN_X, _ENDED_IN_Y, _DISCARDED = 0, 1, 2


class WalkOutcome(Enum):
    ENDED_IN_X = 'ended_in_x'
    ENDED_IN_Y = 'ended_in_y'
    DISCARDED = 'discarded'


class Method(str, Enum):
    """How ``measure_rwc`` evaluates a graph."""

    AUTO = 'auto'
    EXACT = 'exact'
    MONTE_CARLO = 'monte_carlo'


@dataclass(frozen=True)
class WalkConfig:
    walks_per_side: int = DEFAULT_WALKS_PER_SIDE
    hub_count_per_side: int = DEFAULT_HUB_COUNT
    # None means 10 x node_count of the graph being walked
    max_steps: Optional[int] = None
    seed: int = 0
    edge_mode: EdgeMode = EdgeMode.SYMMETRIZED
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'edge_mode', EdgeMode(self.edge_mode))
        if self.walks_per_side < 1:
            raise ConfigurationError('walks_per_side must be at least 1')
        if self.hub_count_per_side < 1:
            raise ConfigurationError('hub_count_per_side must be at least 1')
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigurationError('max_steps must be at least 1')
        if self.threads < 1:
            raise ConfigurationError('threads must be at least 1')

    def steps_for(self, graph: DirectedGraph) -> int:
        return self.max_steps if self.max_steps is not None else max(10 * graph.node_count, 1)


@dataclass(frozen=True)
class HubSet:
    hubs_x: FrozenSet[int]
    hubs_y: FrozenSet[int]

    def side_of(self, node: int) -> Optional[Side]:
        if node in self.hubs_x:
            return Side.X
        if node in self.hubs_y:
            return Side.Y
        return None

    def side_array(self, node_count: int) -> np.ndarray:
        """Per-node int8 array: 0 for X hubs, 1 for Y hubs, -1 elsewhere."""
        sides = np.full(node_count, -1, dtype=np.int8)
        sides[list(self.hubs_x)] = Side.X
        sides[list(self.hubs_y)] = Side.Y
        return sides


@dataclass(frozen=True)
class RwcEstimate:
    p_xx: float
    p_xy: float
    p_yx: float
    p_yy: float
    rwc: float
    stderr_rwc: float
    completed_walks_x: int
    completed_walks_y: int
    discarded_walks: int
    method: str = Method.MONTE_CARLO.value

    def as_dict(self) -> dict:
        return asdict(self)


def _conditional_rows(ended_x_from_x, ended_y_from_x, ended_x_from_y, ended_y_from_y):
    total_x = ended_x_from_x + ended_y_from_x
    total_y = ended_x_from_y + ended_y_from_y
    if total_x <= 0 or total_y <= 0:
        failed = 'X' if total_x <= 0 else 'Y'
        raise EstimationFailedError(f'No walk started in {failed} reached a hub')
    p_xx = ended_x_from_x / total_x
    p_yy = ended_y_from_y / total_y
    return p_xx, 1.0 - p_xx, 1.0 - p_yy, p_yy


def _rwc(p_xx: float, p_xy: float, p_yx: float, p_yy: float) -> float:
    return p_xx * p_yy - p_xy * p_yx


def select_hubs(graph: DirectedGraph, labeling: PartitionLabeling, k_hub: int) -> HubSet:
    """
    Top ``k_hub`` nodes by in-degree within each side; ties go to the lower id.

    UNASSIGNED nodes are never hubs.
    """
    if k_hub < 1:
        raise ConfigurationError('k_hub must be at least 1')
    if len(labeling) != graph.node_count:
        raise ConfigurationError('labeling does not match the graph')
    in_degrees = graph.in_degrees
    hubs = []
    for side in (Side.X, Side.Y):
        members = labeling.members(side)
        if members.size == 0:
            raise DegeneratePartitionError(f'Side {side.name} has no nodes')
        order = np.lexsort((members, -in_degrees[members]))
        hubs.append(frozenset(members[order[:k_hub]].tolist()))
    return HubSet(hubs_x=hubs[0], hubs_y=hubs[1])


def run_walk(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    hubs: HubSet,
    start: int,
    config: WalkConfig,
    walk_seed,
) -> WalkOutcome:
    """Simulate one walk from ``start``; reference implementation of the walk process."""
    if labeling.side(start) is Side.UNASSIGNED:
        raise ConfigurationError(f'walk start {start} must be labeled X or Y')
    adjacency = graph.walk_adjacency(config.edge_mode)
    indptr, indices = adjacency.indptr, adjacency.indices
    rng = np.random.default_rng(walk_seed)

    node = start
    for _ in range(config.steps_for(graph) + 1):
        side = hubs.side_of(node)
        if side is Side.X:
            return WalkOutcome.ENDED_IN_X
        if side is Side.Y:
            return WalkOutcome.ENDED_IN_Y
        degree = indptr[node + 1] - indptr[node]
        if degree == 0:
            return WalkOutcome.DISCARDED
        node = int(indices[indptr[node] + rng.integers(degree)])
    return WalkOutcome.DISCARDED


def hub_reachable(adjacency: sparse.csr_matrix, hub_sides: np.ndarray) -> np.ndarray:
    """Boolean mask of nodes from which some hub can be reached along ``adjacency``."""
    reach = hub_sides >= 0
    frontier = reach.astype(np.float64)
    while True:
        # u joins when one of its walk-neighbors is already reachable
        grown = (adjacency @ frontier) > 0
        new = grown & ~reach
        if not new.any():
            return reach
        reach |= new
        frontier = new.astype(np.float64)


class _Walker:
    """Vectorised walk simulation over a fixed graph, hub set and step budget."""

    def __init__(self, graph: DirectedGraph, hubs: HubSet, config: WalkConfig):
        adjacency = graph.walk_adjacency(config.edge_mode)
        self.indptr = adjacency.indptr.astype(np.int64)
        self.indices = adjacency.indices.astype(np.int64)
        self.degree = np.diff(self.indptr)
        self.hub_sides = hubs.side_array(graph.node_count)
        # walkers entering a node with no route to a hub are discarded on the spot
        self.doomed = ~hub_reachable(adjacency, self.hub_sides)
        self.max_steps = config.steps_for(graph)

    def run_block(self, starts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Return outcome counts [ended_in_x, ended_in_y, discarded] for one block."""
        outcome = self.hub_sides[starts].astype(np.int64)
        outcome[(outcome < 0) & self.doomed[starts]] = _DISCARDED
        active = np.flatnonzero(outcome < 0)
        position = starts[active]
        for _ in range(self.max_steps):
            if active.size == 0:
                break
            offsets = (rng.random(active.size) * self.degree[position]).astype(np.int64)
            position = self.indices[self.indptr[position] + offsets]
            landed = self.hub_sides[position].astype(np.int64)
            landed[(landed < 0) & self.doomed[position]] = _DISCARDED
            done = landed >= 0
            outcome[active[done]] = landed[done]
            active = active[~done]
            position = position[~done]
        outcome[active] = _DISCARDED
        return np.bincount(outcome, minlength=3)


def _block_seeds(seed: int, side: Side, blocks: int) -> List[np.random.SeedSequence]:
    return [np.random.SeedSequence([seed, int(side), block]) for block in range(blocks)]


def _walk_block(walker: _Walker, members: np.ndarray, size: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    starts = rng.choice(members, size=size, replace=True)
    return walker.run_block(starts, rng)


# Set once per worker process by _init_walk_worker.
_worker_state = {}


def _init_walk_worker(walker: _Walker, members: Dict[Side, np.ndarray]):
    _worker_state['walker'] = walker
    _worker_state['members'] = members


def _run_walk_job(job):
    side, size, seed_seq = job
    return side, _walk_block(_worker_state['walker'], _worker_state['members'][side], size, seed_seq)


def estimate_rwc(graph: DirectedGraph, labeling: PartitionLabeling, config: WalkConfig) -> RwcEstimate:
    """
    Monte Carlo RWC estimate.

    ``walks_per_side`` walks start from uniformly drawn (with replacement)
    nodes of each side. Probabilities are conditioned on completed walks; the
    standard error propagates per-side binomial variances. Output depends
    only on the graph, labeling and config, not on ``config.threads``.
    """
    if graph.node_count == 0:
        raise ConfigurationError('cannot estimate RWC of an empty graph')
    hubs = select_hubs(graph, labeling, config.hub_count_per_side)
    walker = _Walker(graph, hubs, config)

    jobs: List[Tuple[Side, int, np.random.SeedSequence]] = []
    for side in (Side.X, Side.Y):
        blocks = math.ceil(config.walks_per_side / WALK_BLOCK_SIZE)
        for block, seed_seq in enumerate(_block_seeds(config.seed, side, blocks)):
            size = min(WALK_BLOCK_SIZE, config.walks_per_side - block * WALK_BLOCK_SIZE)
            jobs.append((side, size, seed_seq))

    members = {side: labeling.members(side) for side in (Side.X, Side.Y)}
    if config.threads > 1 and len(jobs) > 1:
        # walk blocks are CPU-bound Python loops, so they go to worker processes
        with ProcessPoolExecutor(
            max_workers=min(config.threads, len(jobs)),
            initializer=_init_walk_worker,
            initargs=(walker, members),
        ) as executor:
            results = list(executor.map(_run_walk_job, jobs))
    else:
        results = [(side, _walk_block(walker, members[side], size, seed_seq)) for side, size, seed_seq in jobs]

    counts = {Side.X: np.zeros(3, dtype=np.int64), Side.Y: np.zeros(3, dtype=np.int64)}
    for side, block_counts in results:
        counts[side] += block_counts
    x_counts, y_counts = counts[Side.X], counts[Side.Y]

    p_xx, p_xy, p_yx, p_yy = _conditional_rows(
        int(x_counts[_ENDED_IN_X]), int(x_counts[_ENDED_IN_Y]),
        int(y_counts[_ENDED_IN_X]), int(y_counts[_ENDED_IN_Y]),
    )
    completed_x = int(x_counts[_ENDED_IN_X] + x_counts[_ENDED_IN_Y])
    completed_y = int(y_counts[_ENDED_IN_X] + y_counts[_ENDED_IN_Y])
    # with rows summing to 1, RWC = p_xx + p_yy - 1, so the delta method is exact
    variance = p_xx * (1 - p_xx) / completed_x + p_yy * (1 - p_yy) / completed_y
    return RwcEstimate(
        p_xx=p_xx,
        p_xy=p_xy,
        p_yx=p_yx,
        p_yy=p_yy,
        rwc=_rwc(p_xx, p_xy, p_yx, p_yy),
        stderr_rwc=math.sqrt(variance),
        completed_walks_x=completed_x,
        completed_walks_y=completed_y,
        discarded_walks=int(x_counts[_DISCARDED] + y_counts[_DISCARDED]),
        method=Method.MONTE_CARLO.value,
    )


def absorption_probabilities(
    graph: DirectedGraph, hubs: HubSet, edge_mode: EdgeMode = EdgeMode.SYMMETRIZED
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Probability of being absorbed by an X hub and by a Y hub from every node.

    Nodes without a route to any hub are absorbed by the discard state, so
    both of their probabilities are 0.
    """
    n = graph.node_count
    adjacency = graph.walk_adjacency(edge_mode)
    hub_sides = hubs.side_array(n)
    reachable = hub_reachable(adjacency, hub_sides)
    absorb_x = (hub_sides == Side.X).astype(float)
    absorb_y = (hub_sides == Side.Y).astype(float)

    transient = np.flatnonzero(reachable & (hub_sides < 0))
    if transient.size == 0:
        return absorb_x, absorb_y

    degree = np.diff(adjacency.indptr).astype(float)
    rows = adjacency[transient].astype(float)
    rows = sparse.diags(1.0 / degree[transient]) @ rows
    q = rows[:, transient].toarray()
    b = np.column_stack([
        np.asarray(rows[:, np.flatnonzero(hub_sides == Side.X)].sum(axis=1)).ravel(),
        np.asarray(rows[:, np.flatnonzero(hub_sides == Side.Y)].sum(axis=1)).ravel(),
    ])
    try:
        solution = np.linalg.solve(np.eye(transient.size) - q, b)
    except np.linalg.LinAlgError as exc:
        raise ExactSolverError(f'absorbing-chain system is singular: {exc}') from exc
    if not np.all(np.isfinite(solution)):
        raise ExactSolverError('absorbing-chain solve produced non-finite values')
    absorb_x[transient] = solution[:, 0]
    absorb_y[transient] = solution[:, 1]
    return absorb_x, absorb_y


def exact_rwc(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    k_hub: int = DEFAULT_HUB_COUNT,
    edge_mode: EdgeMode = EdgeMode.SYMMETRIZED,
    node_limit: int = EXACT_NODE_LIMIT,
) -> RwcEstimate:
    """
    RWC from absorption probabilities of the walk's Markov chain.

    Starts are weighted uniformly within each side and rows are renormalised
    over the non-discarded mass. Starts with no route to a hub count as
    discarded walks. Standard errors are 0.
    """
    if graph.node_count > node_limit:
        raise ExactSolverLimitError(
            f'exact solver is limited to {node_limit} nodes, graph has {graph.node_count}'
        )
    if graph.node_count == 0:
        raise ConfigurationError('cannot compute RWC of an empty graph')
    hubs = select_hubs(graph, labeling, k_hub)
    absorb_x, absorb_y = absorption_probabilities(graph, hubs, edge_mode)
    starts_x, starts_y = labeling.members(Side.X), labeling.members(Side.Y)
    p_xx, p_xy, p_yx, p_yy = _conditional_rows(
        absorb_x[starts_x].sum(), absorb_y[starts_x].sum(),
        absorb_x[starts_y].sum(), absorb_y[starts_y].sum(),
    )
    reached = (absorb_x + absorb_y) > 0
    completed_x = int(np.count_nonzero(reached[starts_x]))
    completed_y = int(np.count_nonzero(reached[starts_y]))
    return RwcEstimate(
        p_xx=float(p_xx),
        p_xy=float(p_xy),
        p_yx=float(p_yx),
        p_yy=float(p_yy),
        rwc=float(_rwc(p_xx, p_xy, p_yx, p_yy)),
        stderr_rwc=0.0,
        completed_walks_x=completed_x,
        completed_walks_y=completed_y,
        discarded_walks=int(starts_x.size + starts_y.size - completed_x - completed_y),
        method=Method.EXACT.value,
    )


def resolve_method(graph: DirectedGraph, method=Method.AUTO, node_limit: int = EXACT_NODE_LIMIT) -> Method:
    method = Method(method)
    if method is Method.AUTO:
        method = Method.EXACT if graph.node_count <= node_limit else Method.MONTE_CARLO
        logger.debug('Using %s solver for %d nodes', method.value, graph.node_count)
    return method


def measure_rwc(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    config: WalkConfig,
    method=Method.AUTO,
    node_limit: int = EXACT_NODE_LIMIT,
) -> RwcEstimate:
    """Measure RWC with the exact solver or Monte Carlo, as ``method`` asks."""
    if resolve_method(graph, method, node_limit) is Method.EXACT:
        return exact_rwc(graph, labeling, config.hub_count_per_side, config.edge_mode, node_limit)
    return estimate_rwc(graph, labeling, config)
