"""
Plumbing shared by the experiment management commands.

Loads and resolves the experiment config, materialises the input graph,
writes deterministic result files, and keeps the run manifest (config echo,
per-stage timings, content hashes of every input and output).
"""
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from . import __version__
from .config import ExperimentConfig
from .exceptions import ConfigurationError, ControversyError
from .graph_core import (
    CandidatePool,
    DirectedGraph,
    PartitionLabeling,
    load_candidate_pool,
    load_edge_list,
    load_partition,
)
from .models import ExperimentRun
from .serializers import build_experiment_config
from .simulation import generate_candidate_pool, generate_polarized_graph
from .utils import calculate_sha256, file_sha256

logger = logging.getLogger(__name__)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``; ``None`` values are skipped."""
    merged = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, dict):
            current = merged.get(key)
            nested = deep_merge(current if isinstance(current, dict) else {}, value)
            if nested:
                merged[key] = nested
        else:
            merged[key] = value
    return merged


def read_config_document(path) -> Dict[str, Any]:
    try:
        with open(path, encoding='utf-8') as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ConfigurationError(f'Cannot read config {path}: {exc.strerror or exc}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'{path}:{exc.lineno}: invalid JSON ({exc.msg})') from exc
    if not isinstance(document, dict):
        raise ConfigurationError(f'{path}: the config must be a JSON object')
    return document


def load_experiment_config(path=None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Resolve an experiment config: settings defaults < config file < flags.

    Args:
        path: Optional path of a JSON config document
        overrides: Nested values taken from command-line flags

    Returns:
        The resolved ExperimentConfig
    """
    document = read_config_document(path) if path else {}
    return build_experiment_config(deep_merge(document, overrides or {}))


@dataclass
class ExperimentInputs:
    graph: DirectedGraph
    labeling: PartitionLabeling
    pool: Optional[CandidatePool] = None


class RunManifest:
    """Provenance record of one command run."""

    def __init__(self, command: str, config: ExperimentConfig):
        self.command = command
        self.config = config
        self.timings: Dict[str, float] = {}
        self.inputs: Dict[str, str] = {}
        self.outputs: Dict[str, str] = {}

    @property
    def run_id(self) -> str:
        return calculate_sha256(json.dumps({'command': self.command, 'config': self.config.echo}, sort_keys=True))

    @contextmanager
    def stage(self, name: str):
        started = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - started
            self.timings[name] = round(elapsed, 6)
            logger.info('Stage %s finished in %.3fs', name, elapsed)

    def add_input(self, path) -> None:
        self.inputs[str(path)] = file_sha256(path)

    def add_output(self, path) -> Path:
        path = Path(path)
        self.outputs[path.name] = file_sha256(path)
        return path

    def as_dict(self) -> Dict[str, Any]:
        return {
            'run_id': self.run_id,
            'command': self.command,
            'version': __version__,
            'config': self.config.echo,
            'timings': self.timings,
            'inputs': self.inputs,
            'outputs': self.outputs,
        }

    def write(self, directory) -> Path:
        return write_json(Path(directory) / 'manifest.json', self.as_dict())


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (np.ndarray, tuple)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def write_json(path, payload: Any) -> Path:
    """Write ``payload`` with sorted keys so equal payloads give equal bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default)
    path.write_text(text + '\n', encoding='utf-8')
    return path


def write_table(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def load_inputs(config: ExperimentConfig, manifest: RunManifest, require_pool: bool = False) -> ExperimentInputs:
    """
    Load or generate the base graph, its partition and the candidate pool.

    Raises:
        ConfigurationError: If ``require_pool`` is set and the config has no pool
    """
    if require_pool and not config.has_pool:
        source = 'files.candidates' if config.files is not None else 'synthetic.pool'
        raise ConfigurationError(f'This command needs a candidate pool; set {source} in the config')

    with manifest.stage('inputs'):
        if config.files is not None:
            files = config.files
            graph = load_edge_list(files.edges, files.format)
            labeling = load_partition(files.partition, graph, files.format)
            manifest.add_input(files.edges)
            manifest.add_input(files.partition)
            pool = None
            if files.candidates is not None:
                pool = load_candidate_pool(files.candidates, graph, labeling, files.format)
                manifest.add_input(files.candidates)
        else:
            graph, labeling = generate_polarized_graph(config.synthetic.graph)
            pool = None
            if config.synthetic.pool is not None:
                pool = generate_candidate_pool(graph, labeling, config.synthetic.pool)

    logger.info(
        'Loaded graph with %d nodes, %d edges, %d candidate(s)',
        graph.node_count, graph.edge_count, len(pool) if pool is not None else 0,
    )
    return ExperimentInputs(graph=graph, labeling=labeling, pool=pool)


def record_run(manifest: RunManifest, summary: Dict[str, Any]) -> Optional[ExperimentRun]:
    """Store the run in the database; a missing or broken database only logs a warning."""
    try:
        run, _ = ExperimentRun.objects.update_or_create(
            run_id=manifest.run_id,
            defaults={
                'command': manifest.command,
                'seed': manifest.config.seed,
                'config': manifest.config.echo,
                'manifest': json.loads(json.dumps(manifest.as_dict(), default=_json_default)),
                'result_summary': json.loads(json.dumps(summary, default=_json_default)),
            },
        )
        return run
    except DatabaseError as exc:
        logger.warning('Run %s was not recorded: %s', manifest.run_id[:8], exc)
        return None


def parse_float_list(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ConfigurationError(f'Expected a comma-separated list of numbers, got {text!r}') from None


def parse_name_list(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [part.strip() for part in text.split(',') if part.strip()]


class ExperimentCommand(BaseCommand):
    """
    Base class of the rwc/select/simulate/generate commands.

    Subclasses implement ``run(config, manifest, options)`` and return a
    small JSON-ready summary; the base class resolves the config, writes the
    manifest, records the run and maps domain errors to exit codes
    (2 for configuration problems, 3 for estimation failures).
    """

    command_name = ''

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON experiment config')
        parser.add_argument('--seed', type=int, help='Global seed; per-stage seeds derive from it')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--threads', type=int, help='Parallel workers')
        parser.add_argument('--exact', action='store_true', help='Use the exact absorbing-chain solver')
        parser.add_argument('--walks', type=int, help='Random walks per side')
        parser.add_argument('--edges', help='Edge list file (follower<TAB>followee)')
        parser.add_argument('--partition', help='Partition file (node<TAB>X|Y)')
        parser.add_argument('--candidates', help='Candidate file (follower<TAB>candidate)')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def command_overrides(self, options) -> Dict[str, Any]:
        return {}

    def overrides(self, options) -> Dict[str, Any]:
        files = {
            'edges': options.get('edges'),
            'partition': options.get('partition'),
            'candidates': options.get('candidates'),
        }
        overrides = {
            'seed': options.get('seed'),
            'output_dir': options.get('out'),
            'threads': options.get('threads'),
            'method': 'exact' if options.get('exact') else None,
            'walk': {'walks_per_side': options.get('walks'), 'threads': options.get('threads')},
            'files': files if any(value is not None for value in files.values()) else None,
        }
        return deep_merge(overrides, self.command_overrides(options))

    def run(self, config: ExperimentConfig, manifest: RunManifest, options) -> Dict[str, Any]:
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            config = load_experiment_config(options.get('config'), self.overrides(options))
            config.output_dir.mkdir(parents=True, exist_ok=True)
            manifest = RunManifest(self.command_name, config)
            summary = self.run(config, manifest, options)
            manifest.write(config.output_dir)
            record_run(manifest, summary)
        except ControversyError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        except OSError as exc:
            raise CommandError(f'Cannot write output: {exc}', returncode=2) from exc
