"""
Node Addition: choose the k candidates whose arrival lowers RWC the most.

Candidates are scored for popularity (in-degree inside G) and neutrality
(share of followers on the minority side), ranked with Fagin's algorithm,
and the best C = ceil(multiplier * k) are evaluated one by one.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, TypeVar

from .estimator import EXACT_NODE_LIMIT, Method, WalkConfig, measure_rwc, resolve_method
from .exceptions import ConfigurationError, EmptyPoolError
from .graph_core import Candidate, CandidatePool, DirectedGraph, PartitionLabeling, add_candidate, add_candidates

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATE_MULTIPLIER = 3.0

T = TypeVar('T')
R = TypeVar('R')


@dataclass(frozen=True)
class CandidateScore:
    node: int
    in_degree: int
    neutrality: float
    aggregate: float
    candidate: Candidate = field(repr=False, compare=False)

    @property
    def sort_key(self) -> Tuple[float, int]:
        return -self.aggregate, self.node


@dataclass(frozen=True)
class SelectedNode:
    node: int
    external_id: str
    delta_rwc: float
    candidate: Candidate = field(repr=False, compare=False)


@dataclass
class AdditionPlan:
    """
    Selected candidates with their individual and joint effect on RWC.

    ``cumulative_rwc[i]`` is RWC of G plus the first i + 1 selected nodes
    added together; ``summed_rwc[i]`` is what the individual deltas predict
    for the same prefix.
    """

    selected: List[SelectedNode]
    baseline_rwc: float
    cumulative_rwc: List[float]
    summed_rwc: List[float]
    requested_k: int
    method: str
    truncated: bool = False

    @property
    def final_rwc(self) -> float:
        return self.cumulative_rwc[-1] if self.cumulative_rwc else self.baseline_rwc

    def candidates(self) -> List[Candidate]:
        return [selected.candidate for selected in self.selected]


def parallel_map(function: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    """``map`` that keeps input order, on a thread pool when ``threads`` > 1."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(function, items))
    return [function(item) for item in items]


def task_config(config: WalkConfig, task_count: int) -> WalkConfig:
    """Walk config for tasks fanned out by ``parallel_map``; each of them walks in-process."""
    if config.threads > 1 and task_count > 1:
        return replace(config, threads=1)
    return config


def neutrality_score(followers_in_x: int, followers_in_y: int) -> float:
    """Minority-side share of a node's followers; 0.5 is perfectly balanced."""
    if followers_in_x < 0 or followers_in_y < 0:
        raise ConfigurationError('follower counts must be non-negative')
    total = followers_in_x + followers_in_y
    if total == 0:
        return 0.0
    return min(followers_in_x, followers_in_y) / total


def aggregate_score(in_degree: int, neutrality: float, max_degree: int) -> float:
    """(in_degree / max_degree) * (2 * neutrality); monotone in both inputs."""
    popularity = in_degree / max_degree if max_degree else 0.0
    return popularity * (2.0 * neutrality)


def score_candidates(pool: CandidatePool) -> Dict[int, CandidateScore]:
    """
    Popularity/neutrality scores for every candidate, keyed by node.

    aggregate = (in_degree / max in_degree in pool) * (2 * neutrality)
    """
    max_degree = max((candidate.in_degree for candidate in pool), default=0)
    scores = {}
    for candidate in pool:
        neutrality = neutrality_score(candidate.followers_in_x, candidate.followers_in_y)
        scores[candidate.node] = CandidateScore(
            node=candidate.node,
            in_degree=candidate.in_degree,
            neutrality=neutrality,
            aggregate=aggregate_score(candidate.in_degree, neutrality, max_degree),
            candidate=candidate,
        )
    return scores


def rank_candidates(pool: CandidatePool) -> List[CandidateScore]:
    """Brute-force ranking: aggregate descending, node ascending."""
    return sorted(score_candidates(pool).values(), key=lambda score: score.sort_key)


def fagin_top_c(pool: CandidatePool, c: int) -> List[CandidateScore]:
    """
    Top ``c`` candidates by aggregate score, found with Fagin's algorithm.

    Sorted access walks the in-degree list and the neutrality list in
    lockstep until ``c`` candidates have been seen in both, and further while
    the aggregate of the current list heads still reaches the c-th best
    score; random access then completes the scores of every candidate seen.
    Output equals ``rank_candidates(pool)[:c]``, ties included.
    """
    if len(pool) == 0:
        raise EmptyPoolError('candidate pool is empty')
    if c < 1:
        raise ConfigurationError('c must be at least 1')
    c = min(c, len(pool))

    by_degree = sorted(pool, key=lambda candidate: (-candidate.in_degree, candidate.node))
    by_neutrality = sorted(
        pool,
        key=lambda candidate: (
            -neutrality_score(candidate.followers_in_x, candidate.followers_in_y),
            candidate.node,
        ),
    )

    seen_in: List[Set[int]] = [set(), set()]
    complete: Set[int] = set()
    depth = 0

    def sorted_access():
        nonlocal depth
        for position, ranked in enumerate((by_degree, by_neutrality)):
            node = ranked[depth].node
            seen_in[position].add(node)
            if node in seen_in[1 - position]:
                complete.add(node)
        depth += 1

    while len(complete) < c:
        sorted_access()

    scores = score_candidates(pool)
    max_degree = by_degree[0].in_degree
    while depth < len(pool):
        # an unseen candidate scores at most the threshold; on a tie it may still win by id
        ranked = sorted((scores[node] for node in seen_in[0] | seen_in[1]), key=lambda score: score.sort_key)
        threshold = aggregate_score(
            by_degree[depth].in_degree,
            neutrality_score(by_neutrality[depth].followers_in_x, by_neutrality[depth].followers_in_y),
            max_degree,
        )
        if threshold < ranked[c - 1].aggregate:
            break
        sorted_access()

    seen = seen_in[0] | seen_in[1]
    ranked = sorted((scores[node] for node in seen), key=lambda score: score.sort_key)
    return ranked[:c]


def evaluate_candidates(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    candidates: Sequence[CandidateScore],
    config: WalkConfig,
    method=Method.AUTO,
    node_limit: int = EXACT_NODE_LIMIT,
    baseline: Optional[float] = None,
) -> List[Tuple[int, float]]:
    """
    delta_rwc = RWC(G) - RWC(G + candidate) for each candidate on its own.

    Hubs are reselected on every augmented graph. ``auto`` uses the exact
    solver when G plus one node fits under ``node_limit``.
    """
    method = choose_method(graph, 1, method, node_limit)
    if baseline is None:
        baseline = measure_rwc(graph, labeling, config, method, node_limit).rwc
    candidates = list(candidates)
    inner = task_config(config, len(candidates))

    def delta(score: CandidateScore) -> Tuple[int, float]:
        augmented, augmented_labels = add_candidate(graph, labeling, score.candidate)
        return score.node, baseline - measure_rwc(augmented, augmented_labels, inner, method, node_limit).rwc

    return parallel_map(delta, candidates, config.threads)


def joint_curve(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    candidates: Sequence[Candidate],
    config: WalkConfig,
    method=Method.AUTO,
    node_limit: int = EXACT_NODE_LIMIT,
) -> List[float]:
    """RWC of G plus the first i candidates added together, for i = 1..len(candidates)."""
    candidates = list(candidates)
    method = choose_method(graph, len(candidates), method, node_limit)
    inner = task_config(config, len(candidates))

    def prefix_rwc(size: int) -> float:
        augmented, augmented_labels = add_candidates(graph, labeling, candidates[:size])
        return measure_rwc(augmented, augmented_labels, inner, method, node_limit).rwc

    return parallel_map(prefix_rwc, list(range(1, len(candidates) + 1)), config.threads)


def choose_method(
    graph: DirectedGraph, extra_nodes: int, method=Method.AUTO, node_limit: int = EXACT_NODE_LIMIT
) -> Method:
    """Fix one solver for a whole experiment so every RWC in it is comparable."""
    method = Method(method)
    if method is Method.AUTO:
        return Method.EXACT if graph.node_count + extra_nodes <= node_limit else Method.MONTE_CARLO
    return resolve_method(graph, method, node_limit)


def select_addition_plan(
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    pool: CandidatePool,
    k: int,
    candidate_multiplier: float = DEFAULT_CANDIDATE_MULTIPLIER,
    config: WalkConfig = WalkConfig(),
    method=Method.AUTO,
    node_limit: int = EXACT_NODE_LIMIT,
) -> AdditionPlan:
    """
    Pick the k candidates with the largest individual RWC decrease.

    The Fagin top C = ceil(candidate_multiplier * k) are evaluated one by
    one; the winners are then added jointly, largest delta first, to record
    the cumulative curve.
    """
    if k < 1:
        raise ConfigurationError('k must be at least 1')
    if candidate_multiplier < 1:
        raise ConfigurationError('candidate_multiplier must be at least 1')
    if len(pool) == 0:
        raise EmptyPoolError('candidate pool is empty')

    evaluation_size = math.ceil(candidate_multiplier * k)
    method = choose_method(graph, max(k, 1), method, node_limit)
    shortlist = fagin_top_c(pool, evaluation_size)
    baseline = measure_rwc(graph, labeling, config, method, node_limit).rwc
    deltas = evaluate_candidates(graph, labeling, shortlist, config, method, node_limit, baseline)

    ranked = sorted(deltas, key=lambda item: (-item[1], item[0]))[:k]
    truncated = len(ranked) < k
    if truncated:
        logger.warning('Candidate pool holds %d node(s); plan is shorter than k=%d', len(ranked), k)

    selected = []
    for node, delta in ranked:
        candidate = pool.by_node(node)
        selected.append(SelectedNode(
            node=node, external_id=candidate.external_id, delta_rwc=delta, candidate=candidate,
        ))

    cumulative = joint_curve(graph, labeling, [item.candidate for item in selected], config, method, node_limit)
    summed = []
    running = baseline
    for item in selected:
        running -= item.delta_rwc
        summed.append(running)

    return AdditionPlan(
        selected=selected,
        baseline_rwc=baseline,
        cumulative_rwc=cumulative,
        summed_rwc=summed,
        requested_k=k,
        method=method.value,
        truncated=truncated,
    )
