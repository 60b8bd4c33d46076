"""
Follow-graph representation, partition labels, node addition and file I/O.

Edges point from follower to followee: ``u -> v`` means "u follows v". Graphs
are immutable; every mutation returns a new graph, so one instance can be
shared by any number of concurrent walkers.
"""
import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .exceptions import (
    ConfigurationError,
    DuplicateNodeError,
    EmptyGraphError,
    EmptyPoolError,
    GraphInvariantError,
    GraphParseError,
    IncompletePartitionError,
)
from .utils import round_half_up

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SEPARATORS = {
    'tsv': '\t',
    'csv': ',',
}


class Side(IntEnum):
    """Partition label of a node."""

    UNASSIGNED = -1
    X = 0
    Y = 1

    @classmethod
    def parse(cls, label: str) -> 'Side':
        try:
            return {'X': cls.X, 'Y': cls.Y}[label.strip().upper()]
        except KeyError:
            raise ValueError(f'Unknown partition label {label!r} (expected X or Y)') from None

    @property
    def other(self) -> 'Side':
        if self is Side.UNASSIGNED:
            return self
        return Side.Y if self is Side.X else Side.X


class EdgeMode(str, Enum):
    """Which edges a random walker may traverse."""

    SYMMETRIZED = 'symmetrized'
    DIRECTED_OUT = 'directed_out'


class DirectedGraph:
    """
    Simple directed graph over dense integer node ids.

    Out- and in-adjacency are stored as two CSR matrices that mirror each
    other. Self-loops and parallel edges are dropped at construction.
    """

    def __init__(
        self,
        node_count: int,
        sources: Iterable[int] = (),
        targets: Iterable[int] = (),
        external_ids: Optional[Sequence[str]] = None,
        added_nodes: Iterable[int] = (),
    ):
        if node_count < 0:
            raise ConfigurationError(f'node_count must be non-negative, got {node_count}')
        src = np.asarray(list(sources) if not isinstance(sources, np.ndarray) else sources, dtype=np.int64)
        dst = np.asarray(list(targets) if not isinstance(targets, np.ndarray) else targets, dtype=np.int64)
        if src.shape != dst.shape:
            raise ConfigurationError('sources and targets must have the same length')
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= node_count):
            raise ConfigurationError(f'edge endpoint outside node range [0, {node_count})')

        keep = src != dst
        keys = np.unique(src[keep] * node_count + dst[keep]) if node_count else np.empty(0, np.int64)
        src = keys // node_count if node_count else keys
        dst = keys % node_count if node_count else keys

        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=node_count), out=indptr[1:])
        self._node_count = node_count
        self._out = sparse.csr_matrix(
            (np.ones(keys.size, dtype=np.int8), dst, indptr), shape=(node_count, node_count)
        )
        self._in = self._out.transpose().tocsr()
        self._in.sort_indices()

        if external_ids is not None:
            external_ids = tuple(str(name) for name in external_ids)
            if len(external_ids) != node_count:
                raise ConfigurationError(
                    f'{len(external_ids)} external ids given for {node_count} nodes'
                )
            if len(set(external_ids)) != node_count:
                raise DuplicateNodeError('external ids must be unique')
        self._external_ids = external_ids
        self._added_nodes = tuple(int(node) for node in added_nodes)

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[Tuple[int, int]],
        external_ids: Optional[Sequence[str]] = None,
    ) -> 'DirectedGraph':
        pairs = list(edges)
        return cls(
            node_count,
            [u for u, _ in pairs],
            [v for _, v in pairs],
            external_ids=external_ids,
        )

    def __repr__(self):
        return f'<DirectedGraph nodes={self.node_count} edges={self.edge_count}>'

    # -- structure -----------------------------------------------------

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def edge_count(self) -> int:
        return int(self._out.nnz)

    @property
    def external_ids(self) -> Optional[Tuple[str, ...]]:
        return self._external_ids

    @property
    def added_nodes(self) -> Tuple[int, ...]:
        """Nodes that entered this graph through node addition, in order."""
        return self._added_nodes

    def out_neighbors(self, node: int) -> np.ndarray:
        return self._out.indices[self._out.indptr[node]:self._out.indptr[node + 1]]

    def in_neighbors(self, node: int) -> np.ndarray:
        return self._in.indices[self._in.indptr[node]:self._in.indptr[node + 1]]

    @cached_property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self._in.indptr)

    @cached_property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self._out.indptr)

    def in_degree(self, node: int) -> int:
        return int(self.in_degrees[node])

    def out_degree(self, node: int) -> int:
        return int(self.out_degrees[node])

    def has_edge(self, source: int, target: int) -> bool:
        return bool(np.isin(target, self.out_neighbors(source)))

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return (sources, targets), sorted by source then target."""
        sources = np.repeat(np.arange(self._node_count, dtype=np.int64), self.out_degrees)
        return sources, self._out.indices.astype(np.int64)

    def edges(self) -> Iterator[Tuple[int, int]]:
        sources, targets = self.edge_arrays()
        return zip(sources.tolist(), targets.tolist())

    def walk_adjacency(self, mode: EdgeMode = EdgeMode.SYMMETRIZED) -> sparse.csr_matrix:
        """
        CSR matrix whose row u lists the nodes a walker at u may step to.

        SYMMETRIZED uses out- and in-neighbors (each neighbor once),
        DIRECTED_OUT uses followees only.
        """
        mode = EdgeMode(mode)
        if mode is EdgeMode.DIRECTED_OUT:
            return self._out
        return self._symmetrized

    @cached_property
    def _symmetrized(self) -> sparse.csr_matrix:
        both = (self._out + self._in).tocsr()
        both.data[:] = 1
        both.sort_indices()
        return both

    # -- identifiers -----------------------------------------------------

    def external_id(self, node: int) -> str:
        if self._external_ids is None:
            return str(node)
        return self._external_ids[node]

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {self.external_id(node): node for node in range(self._node_count)}

    def index_of(self, external_id: str) -> Optional[int]:
        return self._index.get(str(external_id))

    # -- derived graphs ------------------------------------------------------

    def with_added_nodes(
        self, follower_lists: Sequence[Sequence[int]], external_ids: Sequence[str]
    ) -> 'DirectedGraph':
        """Append one node per follower list, with an edge f -> new node per follower."""
        if len(follower_lists) != len(external_ids):
            raise ConfigurationError('one external id is required per added node')
        sources, targets = self.edge_arrays()
        new_nodes = list(range(self._node_count, self._node_count + len(follower_lists)))
        extra_sources = [np.asarray(followers, dtype=np.int64) for followers in follower_lists]
        extra_targets = [
            np.full(len(followers), node, dtype=np.int64)
            for followers, node in zip(extra_sources, new_nodes)
        ]
        names = [self.external_id(node) for node in range(self._node_count)] + list(external_ids)
        return DirectedGraph(
            self._node_count + len(new_nodes),
            np.concatenate([sources, *extra_sources]),
            np.concatenate([targets, *extra_targets]),
            external_ids=names,
            added_nodes=self._added_nodes + tuple(new_nodes),
        )

    def without_in_edges(self, removals: Mapping[int, Iterable[int]]) -> 'DirectedGraph':
        """Drop the edges f -> target for every target and follower f in ``removals``."""
        sources, targets = self.edge_arrays()
        dropped = [
            np.asarray(list(followers), dtype=np.int64) * self._node_count + target
            for target, followers in removals.items()
        ]
        if not dropped:
            return self
        keep = ~np.isin(sources * self._node_count + targets, np.concatenate(dropped))
        return DirectedGraph(
            self._node_count,
            sources[keep],
            targets[keep],
            external_ids=self._external_ids,
            added_nodes=self._added_nodes,
        )

    def check_consistency(self) -> None:
        """Full scan of the adjacency invariants; raises GraphInvariantError."""
        if (self._out != self._in.transpose()).nnz:
            raise GraphInvariantError('out- and in-adjacency do not mirror each other')
        if self._out.diagonal().any():
            raise GraphInvariantError('graph contains a self-loop')
        sources, targets = self.edge_arrays()
        keys = sources * max(self._node_count, 1) + targets
        if keys.size and not np.all(np.diff(keys) > 0):
            raise GraphInvariantError('graph contains parallel edges')
        if not np.array_equal(self.in_degrees, np.bincount(targets, minlength=self._node_count)):
            raise GraphInvariantError('in-degree table disagrees with the edge list')


class PartitionLabeling:
    """Per-node partition label: X, Y or UNASSIGNED."""

    def __init__(self, labels: Iterable[int]):
        values = np.array(list(labels) if not isinstance(labels, np.ndarray) else labels, dtype=np.int8)
        if values.size and not np.isin(values, [Side.UNASSIGNED, Side.X, Side.Y]).all():
            raise ConfigurationError('labels must be X, Y or UNASSIGNED')
        values.setflags(write=False)
        self._labels = values

    @classmethod
    def from_sides(cls, x_count: int, y_count: int) -> 'PartitionLabeling':
        """Label the first ``x_count`` nodes X and the next ``y_count`` nodes Y."""
        return cls([Side.X] * x_count + [Side.Y] * y_count)

    def __len__(self):
        return int(self._labels.size)

    def __eq__(self, other):
        return isinstance(other, PartitionLabeling) and np.array_equal(self._labels, other._labels)

    def __repr__(self):
        return f'<PartitionLabeling X={self.count(Side.X)} Y={self.count(Side.Y)}>'

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def side(self, node: int) -> Side:
        return Side(int(self._labels[node]))

    def members(self, side: Side) -> np.ndarray:
        return np.flatnonzero(self._labels == side)

    def count(self, side: Side) -> int:
        return int(np.count_nonzero(self._labels == side))

    @property
    def is_degenerate(self) -> bool:
        return self.count(Side.X) == 0 or self.count(Side.Y) == 0

    def with_unassigned(self, count: int = 1) -> 'PartitionLabeling':
        return PartitionLabeling(
            np.concatenate([self._labels, np.full(count, Side.UNASSIGNED, dtype=np.int8)])
        )

    def swapped(self) -> 'PartitionLabeling':
        """Exchange X and Y; UNASSIGNED stays put."""
        labels = self._labels.copy()
        labels[self._labels == Side.X] = Side.Y
        labels[self._labels == Side.Y] = Side.X
        return PartitionLabeling(labels)


@dataclass(frozen=True)
class Candidate:
    """
    A node of the potential graph that is not yet part of the debate.

    ``node`` indexes the potential graph: candidates are numbered after the
    nodes of G, in pool order.
    """

    node: int
    external_id: str
    followers: Tuple[int, ...]
    followers_in_x: int
    followers_in_y: int

    @property
    def in_degree(self) -> int:
        return len(self.followers)


class CandidatePool(Sequence):
    """Ordered collection of candidates for one base graph."""

    def __init__(self, candidates: Iterable[Candidate] = ()):
        self._candidates = tuple(candidates)
        self._by_node = {candidate.node: candidate for candidate in self._candidates}
        if len(self._by_node) != len(self._candidates):
            raise DuplicateNodeError('candidate pool contains a node twice')

    @classmethod
    def from_followers(
        cls,
        graph: DirectedGraph,
        labeling: PartitionLabeling,
        followers_by_id: Mapping[str, Iterable[int]],
    ) -> 'CandidatePool':
        """Build a pool from ``{external id: follower nodes in G}``, keeping mapping order."""
        candidates = []
        for offset, (external_id, followers) in enumerate(followers_by_id.items()):
            if graph.index_of(external_id) is not None:
                raise DuplicateNodeError(f'candidate {external_id!r} is already a node of the graph')
            nodes = tuple(sorted(set(int(node) for node in followers)))
            if nodes and (nodes[0] < 0 or nodes[-1] >= graph.node_count):
                raise ConfigurationError(f'candidate {external_id!r} has a follower outside the graph')
            sides = labeling.labels[list(nodes)] if nodes else np.empty(0, dtype=np.int8)
            if np.any(sides == Side.UNASSIGNED):
                raise ConfigurationError(f'candidate {external_id!r} is followed by an unassigned node')
            candidates.append(Candidate(
                node=graph.node_count + offset,
                external_id=str(external_id),
                followers=nodes,
                followers_in_x=int(np.count_nonzero(sides == Side.X)),
                followers_in_y=int(np.count_nonzero(sides == Side.Y)),
            ))
        return cls(candidates)

    def __len__(self):
        return len(self._candidates)

    def __getitem__(self, item):
        return self._candidates[item]

    def __repr__(self):
        return f'<CandidatePool size={len(self)}>'

    def by_node(self, node: int) -> Candidate:
        return self._by_node[node]


# -- node addition and removal ----------------------------------------------


def add_candidate(
    graph: DirectedGraph, labeling: PartitionLabeling, candidate: Candidate
) -> Tuple[DirectedGraph, PartitionLabeling]:
    """
    Add one candidate to the graph.

    Only the candidate's followers inside G link to it; the new node is left
    UNASSIGNED. The input graph is not modified.
    """
    return add_candidates(graph, labeling, [candidate])


def add_candidates(
    graph: DirectedGraph, labeling: PartitionLabeling, candidates: Sequence[Candidate]
) -> Tuple[DirectedGraph, PartitionLabeling]:
    """Add several candidates in order, in a single rebuild."""
    if len(labeling) != graph.node_count:
        raise ConfigurationError('labeling does not match the graph')
    seen = set()
    for candidate in candidates:
        if graph.index_of(candidate.external_id) is not None or candidate.external_id in seen:
            raise DuplicateNodeError(f'node {candidate.external_id!r} is already present')
        seen.add(candidate.external_id)
        if candidate.followers and max(candidate.followers) >= graph.node_count:
            raise ConfigurationError(f'candidate {candidate.external_id!r} has a follower outside the graph')
    if not candidates:
        return graph, labeling
    augmented = graph.with_added_nodes(
        [candidate.followers for candidate in candidates],
        [candidate.external_id for candidate in candidates],
    )
    return augmented, labeling.with_unassigned(len(candidates))


def potential_graph(
    graph: DirectedGraph, labeling: PartitionLabeling, pool: CandidatePool
) -> Tuple[DirectedGraph, PartitionLabeling]:
    """G plus every candidate of the pool."""
    return add_candidates(graph, labeling, list(pool))


def sample_unfollowers(graph: DirectedGraph, node: int, fraction: float, seed) -> np.ndarray:
    """
    Choose round(fraction * in_degree) followers of ``node`` uniformly without replacement.

    Counts round half up. The choice is a prefix of one seeded permutation,
    so for a fixed seed a larger fraction removes a superset of followers.
    """
    if not 0 <= node < graph.node_count:
        raise ConfigurationError(f'node {node} is not in the graph')
    if not 0.0 <= fraction <= 1.0:
        raise ConfigurationError(f'fraction must lie in [0, 1], got {fraction}')
    followers = graph.in_neighbors(node)
    count = round_half_up(fraction * followers.size)
    if count == 0:
        return followers[:0]
    rng = np.random.default_rng(seed)
    return np.sort(rng.permutation(followers)[:count])


def remove_in_edges(graph: DirectedGraph, node: int, fraction: float, seed) -> DirectedGraph:
    """Remove a seeded random ``fraction`` of the incoming edges of ``node``."""
    unfollowers = sample_unfollowers(graph, node, fraction, seed)
    if unfollowers.size == 0:
        return graph
    return graph.without_in_edges({node: unfollowers})


# -- file formats ------------------------------------------------------------


def _resolve_format(path: PathLike, fmt: Optional[str]) -> str:
    if fmt is None:
        fmt = 'csv' if str(path).lower().endswith('.csv') else 'tsv'
    if fmt not in SEPARATORS:
        raise ConfigurationError(f'Unknown file format {fmt!r} (expected one of {sorted(SEPARATORS)})')
    return fmt


def _iter_records(path: PathLike, fmt: str) -> Iterator[Tuple[int, List[str]]]:
    separator = SEPARATORS[fmt]
    try:
        handle = open(path, encoding='utf-8')
    except OSError as exc:
        raise ConfigurationError(f'Cannot read {path}: {exc.strerror or exc}') from exc
    with handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            yield line_number, [field.strip() for field in line.split(separator)]


def load_edge_list(path: PathLike, format: Optional[str] = None) -> DirectedGraph:
    """
    Read a ``source<sep>target`` edge list into a graph.

    Node ids are assigned densely in order of first appearance. Duplicate
    edges collapse and self-loops are dropped, both with a warning. A row
    holding a single field declares a node without edges.
    """
    fmt = _resolve_format(path, format)
    index: Dict[str, int] = {}
    sources: List[int] = []
    targets: List[int] = []
    self_loops = 0
    for line_number, fields in _iter_records(path, fmt):
        if len(fields) == 1 and fields[0]:
            index.setdefault(fields[0], len(index))
            continue
        if len(fields) != 2 or not all(fields):
            raise GraphParseError('expected "source<sep>target"', line_number, path)
        source = index.setdefault(fields[0], len(index))
        target = index.setdefault(fields[1], len(index))
        if source == target:
            self_loops += 1
            continue
        sources.append(source)
        targets.append(target)

    if not index:
        raise EmptyGraphError(f'{path} declares no nodes')
    graph = DirectedGraph(len(index), sources, targets, external_ids=list(index))
    duplicates = len(sources) - graph.edge_count
    if self_loops:
        logger.warning('Dropped %d self-loop(s) from %s', self_loops, path)
    if duplicates:
        logger.warning('Collapsed %d duplicate edge(s) in %s', duplicates, path)
    return graph


def load_partition(path: PathLike, graph: DirectedGraph, format: Optional[str] = None) -> PartitionLabeling:
    """Read ``node<sep>X|Y`` rows; every graph node must appear exactly once."""
    fmt = _resolve_format(path, format)
    labels = np.full(graph.node_count, Side.UNASSIGNED, dtype=np.int8)
    for line_number, fields in _iter_records(path, fmt):
        if len(fields) != 2 or not all(fields):
            raise GraphParseError('expected "node<sep>X|Y"', line_number, path)
        node = graph.index_of(fields[0])
        if node is None:
            raise GraphParseError(f'unknown node {fields[0]!r}', line_number, path)
        try:
            side = Side.parse(fields[1])
        except ValueError as exc:
            raise GraphParseError(str(exc), line_number, path) from None
        if labels[node] != Side.UNASSIGNED:
            raise DuplicateNodeError(f'{path}:{line_number}: node {fields[0]!r} is labeled twice')
        labels[node] = side

    missing = np.flatnonzero(labels == Side.UNASSIGNED)
    if missing.size:
        raise IncompletePartitionError(graph.external_id(node) for node in missing)
    labeling = PartitionLabeling(labels)
    if labeling.is_degenerate:
        logger.warning('Partition %s leaves one side empty; RWC is undefined for it', path)
    return labeling


def load_candidate_pool(
    path: PathLike,
    graph: DirectedGraph,
    labeling: PartitionLabeling,
    format: Optional[str] = None,
) -> CandidatePool:
    """
    Read ``follower<sep>candidate`` rows into a candidate pool.

    A row holding a single field declares a candidate without followers.
    """
    fmt = _resolve_format(path, format)
    followers_by_id: Dict[str, List[int]] = {}
    for line_number, fields in _iter_records(path, fmt):
        if len(fields) == 1 and fields[0]:
            followers_by_id.setdefault(fields[0], [])
            continue
        if len(fields) != 2 or not all(fields):
            raise GraphParseError('expected "follower<sep>candidate"', line_number, path)
        follower = graph.index_of(fields[0])
        if follower is None:
            raise GraphParseError(f'follower {fields[0]!r} is not a node of the graph', line_number, path)
        if graph.index_of(fields[1]) is not None:
            raise DuplicateNodeError(f'{path}:{line_number}: candidate {fields[1]!r} is already in the graph')
        followers_by_id.setdefault(fields[1], []).append(follower)

    if not followers_by_id:
        raise EmptyPoolError(f'{path} declares no candidates')
    return CandidatePool.from_followers(graph, labeling, followers_by_id)


def write_edge_list(graph: DirectedGraph, path: PathLike, format: Optional[str] = None) -> Path:
    fmt = _resolve_format(path, format)
    separator = SEPARATORS[fmt]
    path = Path(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(f'# source{separator}target\n')
        isolated = np.flatnonzero((graph.in_degrees == 0) & (graph.out_degrees == 0))
        for node in isolated:
            handle.write(f'{graph.external_id(node)}\n')
        for source, target in graph.edges():
            handle.write(f'{graph.external_id(source)}{separator}{graph.external_id(target)}\n')
    return path


def write_partition(
    graph: DirectedGraph, labeling: PartitionLabeling, path: PathLike, format: Optional[str] = None
) -> Path:
    """Write X/Y rows; UNASSIGNED (added) nodes are left out."""
    fmt = _resolve_format(path, format)
    separator = SEPARATORS[fmt]
    path = Path(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(f'# node{separator}side\n')
        for node in range(graph.node_count):
            side = labeling.side(node)
            if side is not Side.UNASSIGNED:
                handle.write(f'{graph.external_id(node)}{separator}{side.name}\n')
    return path


def write_candidate_pool(
    graph: DirectedGraph, pool: CandidatePool, path: PathLike, format: Optional[str] = None
) -> Path:
    fmt = _resolve_format(path, format)
    separator = SEPARATORS[fmt]
    path = Path(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(f'# follower{separator}candidate\n')
        for candidate in pool:
            if not candidate.followers:
                handle.write(f'{candidate.external_id}\n')
            for follower in candidate.followers:
                handle.write(f'{graph.external_id(follower)}{separator}{candidate.external_id}\n')
    return path


def write_graph(
    graph: DirectedGraph, labeling: PartitionLabeling, directory: PathLike, stem: str = 'graph'
) -> List[Path]:
    """
    Serialize a (possibly augmented) graph as edge list, partition and sidecar.

    The ``.added.tsv`` sidecar lists nodes that entered through node addition
    and is only written when there are any.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = [
        write_edge_list(graph, directory / f'{stem}.edges.tsv'),
        write_partition(graph, labeling, directory / f'{stem}.partition.tsv'),
    ]
    if graph.added_nodes:
        sidecar = directory / f'{stem}.added.tsv'
        with open(sidecar, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write('# added node\n')
            for node in graph.added_nodes:
                handle.write(f'{graph.external_id(node)}\n')
        written.append(sidecar)
    return written
