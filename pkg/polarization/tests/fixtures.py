"""Small graphs with known RWC values, shared by the test modules."""
import itertools
import json
from pathlib import Path

from polarization.estimator import WalkConfig
from polarization.graph_core import Candidate, CandidatePool, DirectedGraph, PartitionLabeling
from polarization.simulation import PolarizedGraphParams, generate_polarized_graph

# Path 0-1-2-5-4-3 once symmetrized; hubs (k=1) are 0 and 3.
PATH_EDGES = [(1, 0), (2, 1), (2, 5), (5, 4), (4, 3)]

SMALL_SYNTHETIC = {
    'graph': {
        'nodes_per_side': 30,
        'p_in': 0.15,
        'p_out': 0.01,
        'hub_count': 2,
        'hub_in_degree_boost': 10,
    },
    'pool': {
        'pool_size': 12,
        'degree_distribution': 'uniform(4,12)',
        'neutrality_distribution': 'uniform',
    },
}


def path_graph():
    """Expected with k_hub=1: p_xx = p_yy = 0.8, p_xy = p_yx = 0.2, RWC = 0.6."""
    graph = DirectedGraph.from_edges(6, PATH_EDGES)
    return graph, PartitionLabeling.from_sides(3, 3)


def complete_graph(n=20):
    """Every ordered pair linked; exact RWC with k_hub=1 is 0.1."""
    pairs = [(u, v) for u, v in itertools.product(range(n), repeat=2) if u != v]
    return DirectedGraph.from_edges(n, pairs), PartitionLabeling.from_sides(n // 2, n - n // 2)


def two_block(seed=0, nodes_per_side=40, p_in=0.1, p_out=0.02, hub_count=3, boost=5):
    return generate_polarized_graph(PolarizedGraphParams(
        nodes_per_side=nodes_per_side,
        p_in=p_in,
        p_out=p_out,
        hub_count=hub_count,
        hub_in_degree_boost=boost,
        seed=seed,
    ))


def walk_config(**overrides):
    values = {'walks_per_side': 10_000, 'hub_count_per_side': 1, 'seed': 7}
    values.update(overrides)
    return WalkConfig(**values)


def make_pool(graph, labeling, followers_by_id):
    return CandidatePool.from_followers(graph, labeling, followers_by_id)


def score_only_candidate(node, followers_in_x, followers_in_y):
    """Candidate whose follower ids only matter through their count."""
    return Candidate(
        node=node,
        external_id=f'c{node}',
        followers=tuple(range(followers_in_x + followers_in_y)),
        followers_in_x=followers_in_x,
        followers_in_y=followers_in_y,
    )


def write_path_files(directory):
    """Write the path graph as edge list / partition files; ids keep their node numbers."""
    directory = Path(directory)
    edges = directory / 'edges.tsv'
    lines = ['# node declarations fix the id order'] + [str(node) for node in range(6)]
    lines += [f'{u}\t{v}' for u, v in PATH_EDGES]
    edges.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    partition = directory / 'partition.tsv'
    partition.write_text('0\tX\n1\tX\n2\tX\n3\tY\n4\tY\n5\tY\n', encoding='utf-8')
    return edges, partition


def write_config(directory, document, name='config.json'):
    path = Path(directory) / name
    path.write_text(json.dumps(document), encoding='utf-8')
    return path
