"""
Resolved experiment configuration.

``ExperimentConfigSerializer`` validates a config document and returns an
``ExperimentConfig``; commands and the harness only ever see the resolved
dataclasses below.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from django.conf import settings

from .estimator import Method, WalkConfig
from .simulation import DEFAULT_FRACTIONS, CandidatePoolParams, PolarizedGraphParams, Strategy

SETTING_DEFAULTS = {
    'WALKS_PER_SIDE': 10_000,
    'HUB_COUNT': 10,
    'EDGE_MODE': 'symmetrized',
    'EXACT_NODE_LIMIT': 2000,
    'CANDIDATE_MULTIPLIER': 3.0,
    'UNFOLLOW_TRIALS': 5,
    'THREADS': 1,
    'OUTPUT_DIR': 'runs',
    'API_MAX_NODES': 2000,
}


def controversy_setting(name: str) -> Any:
    """Read one entry of ``settings.CONTROVERSY``, falling back to the built-in default."""
    return getattr(settings, 'CONTROVERSY', {}).get(name, SETTING_DEFAULTS[name])


@dataclass(frozen=True)
class FileInputs:
    edges: Path
    partition: Path
    candidates: Optional[Path] = None
    format: Optional[str] = None


@dataclass(frozen=True)
class SyntheticInputs:
    graph: PolarizedGraphParams
    pool: Optional[CandidatePoolParams] = None


@dataclass(frozen=True)
class ExperimentConfig:
    walk: WalkConfig
    files: Optional[FileInputs] = None
    synthetic: Optional[SyntheticInputs] = None
    k: int = 30
    candidate_multiplier: float = 3.0
    k_max: int = 30
    fractions: Tuple[float, ...] = DEFAULT_FRACTIONS
    trials: int = 5
    strategies: Tuple[Strategy, ...] = tuple(Strategy)
    output_dir: Path = Path('runs')
    seed: int = 0
    method: Method = Method.AUTO
    exact_node_limit: int = 2000
    random_fixed_seed: int = 0
    unfollow_seed: int = 0
    echo: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    @property
    def has_pool(self) -> bool:
        if self.files is not None:
            return self.files.candidates is not None
        return self.synthetic.pool is not None
