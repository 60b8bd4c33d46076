import re
from pathlib import Path

from rest_framework import serializers

from .config import ExperimentConfig, FileInputs, SyntheticInputs, controversy_setting
from .estimator import Method, WalkConfig
from .exceptions import ConfigurationError
from .graph_core import SEPARATORS, EdgeMode
from .models import ExperimentRun
from .simulation import (
    DEFAULT_FRACTIONS,
    CandidatePoolParams,
    DegreeDistribution,
    NeutralityDistribution,
    PolarizedGraphParams,
    Strategy,
)
from .utils import derive_seed

MAX_SEED = 2 ** 63 - 1

DISTRIBUTION_PATTERN = re.compile(r'^\s*(fixed|uniform)\s*(?:\(([^)]*)\))?\s*$', re.IGNORECASE)


def parse_distribution(text: str) -> tuple:
    """
    Split a compact distribution spelling into its kind and arguments.

    Args:
        text: e.g. 'fixed(50)', 'uniform(10, 150)' or 'uniform'

    Returns:
        (kind, [argument strings])

    Raises:
        serializers.ValidationError: If the text is not a known spelling

    Examples:
        >>> parse_distribution('uniform(10,150)')
        ('uniform', ['10', '150'])
    """
    match = DISTRIBUTION_PATTERN.match(text)
    if not match:
        raise serializers.ValidationError(
            f'Cannot parse distribution {text!r}. '
            'Expected "fixed(value)", "uniform(low,high)" or "uniform".'
        )
    kind = match.group(1).lower()
    arguments = [part.strip() for part in (match.group(2) or '').split(',') if part.strip()]
    return kind, arguments


class DegreeDistributionField(serializers.Field):
    """Candidate degree distribution: 'fixed(d)', 'uniform(lo,hi)' or the equivalent object."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            kind, arguments = parse_distribution(data)
            data = {'kind': kind}
            if kind == 'fixed' and len(arguments) == 1:
                data['value'] = arguments[0]
            elif kind == 'uniform' and len(arguments) == 2:
                data['low'], data['high'] = arguments
            else:
                raise serializers.ValidationError(f'Wrong number of arguments for a {kind} degree distribution.')
        if not isinstance(data, dict):
            raise serializers.ValidationError('Must be a string or an object.')
        try:
            kind = str(data.get('kind', 'fixed')).lower()
            if kind == 'fixed':
                return DegreeDistribution.fixed(int(data['value']))
            return DegreeDistribution(kind=kind, low=int(data.get('low', 1)), high=int(data.get('high', 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise serializers.ValidationError(str(exc)) from None

    def to_representation(self, value):
        if value.kind == 'fixed':
            return f'fixed({value.value})'
        return f'uniform({value.low},{value.high})'


class NeutralityDistributionField(serializers.Field):
    """Candidate neutrality distribution: 'fixed(v)' with v in [0, 0.5], or 'uniform'."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            kind, arguments = parse_distribution(data)
            data = {'kind': kind}
            if kind == 'fixed' and len(arguments) == 1:
                data['value'] = arguments[0]
            elif kind == 'fixed' or arguments:
                raise serializers.ValidationError(f'Wrong number of arguments for a {kind} neutrality distribution.')
        if not isinstance(data, dict):
            raise serializers.ValidationError('Must be a string or an object.')
        try:
            kind = str(data.get('kind', 'uniform')).lower()
            if kind == 'fixed':
                return NeutralityDistribution.fixed(float(data['value']))
            return NeutralityDistribution(kind=kind)
        except (KeyError, TypeError, ValueError) as exc:
            raise serializers.ValidationError(str(exc)) from None

    def to_representation(self, value):
        if value.kind == 'fixed':
            return f'fixed({value.value})'
        return 'uniform'


class WalkConfigSerializer(serializers.Serializer):
    """Random walk settings; omitted fields fall back to settings.CONTROVERSY."""

    walks_per_side = serializers.IntegerField(min_value=1, default=lambda: controversy_setting('WALKS_PER_SIDE'))
    hub_count_per_side = serializers.IntegerField(min_value=1, default=lambda: controversy_setting('HUB_COUNT'))
    max_steps = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    seed = serializers.IntegerField(min_value=0, required=False)
    edge_mode = serializers.ChoiceField(
        choices=[mode.value for mode in EdgeMode],
        default=lambda: controversy_setting('EDGE_MODE'),
    )
    threads = serializers.IntegerField(min_value=1, required=False)

    def create(self, validated_data):
        return WalkConfig(**validated_data)


class PolarizedGraphParamsSerializer(serializers.Serializer):
    nodes_per_side = serializers.IntegerField(min_value=1)
    p_in = serializers.FloatField(min_value=0.0, max_value=1.0)
    p_out = serializers.FloatField(min_value=0.0, max_value=1.0)
    hub_count = serializers.IntegerField(min_value=0, default=10)
    hub_in_degree_boost = serializers.IntegerField(min_value=0, default=250)
    seed = serializers.IntegerField(min_value=0, required=False)

    def validate(self, attrs):
        if attrs['p_out'] > attrs['p_in']:
            raise serializers.ValidationError({'p_out': 'Must not exceed p_in.'})
        if attrs['nodes_per_side'] <= attrs['hub_count']:
            raise serializers.ValidationError({'nodes_per_side': 'Must exceed hub_count.'})
        return attrs

    def create(self, validated_data):
        return PolarizedGraphParams(**validated_data)


class CandidatePoolParamsSerializer(serializers.Serializer):
    pool_size = serializers.IntegerField(min_value=0)
    degree_distribution = DegreeDistributionField(default=lambda: DegreeDistribution.uniform(10, 150))
    neutrality_distribution = NeutralityDistributionField(default=NeutralityDistribution.uniform)
    seed = serializers.IntegerField(min_value=0, required=False)
    id_prefix = serializers.CharField(default='c', allow_blank=False)

    def create(self, validated_data):
        return CandidatePoolParams(**validated_data)


class FileInputSerializer(serializers.Serializer):
    edges = serializers.CharField()
    partition = serializers.CharField()
    candidates = serializers.CharField(required=False, allow_null=True)
    format = serializers.ChoiceField(choices=sorted(SEPARATORS), required=False, allow_null=True)

    def create(self, validated_data):
        candidates = validated_data.get('candidates')
        return FileInputs(
            edges=Path(validated_data['edges']),
            partition=Path(validated_data['partition']),
            candidates=Path(candidates) if candidates else None,
            format=validated_data.get('format'),
        )


class SyntheticInputSerializer(serializers.Serializer):
    graph = PolarizedGraphParamsSerializer()
    pool = CandidatePoolParamsSerializer(required=False)


class SelectionSerializer(serializers.Serializer):
    k = serializers.IntegerField(min_value=1, default=30)
    candidate_multiplier = serializers.FloatField(
        min_value=1.0, default=lambda: controversy_setting('CANDIDATE_MULTIPLIER')
    )


class SimulationSerializer(serializers.Serializer):
    k_max = serializers.IntegerField(min_value=1, default=30)
    fractions = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1.0),
        allow_empty=False,
        default=lambda: list(DEFAULT_FRACTIONS),
    )
    trials = serializers.IntegerField(min_value=1, default=lambda: controversy_setting('UNFOLLOW_TRIALS'))
    strategies = serializers.ListField(
        child=serializers.ChoiceField(choices=[strategy.value for strategy in Strategy]),
        allow_empty=False,
        default=lambda: [strategy.value for strategy in Strategy],
    )


class ExperimentConfigSerializer(serializers.Serializer):
    """
    Validate a whole experiment document.

    Exactly one of ``files`` and ``synthetic`` must be given. Seeds that are
    not set explicitly are derived from the global ``seed`` per stage.
    ``save()`` returns an ``ExperimentConfig``.
    """

    files = FileInputSerializer(required=False)
    synthetic = SyntheticInputSerializer(required=False)
    walk = WalkConfigSerializer(required=False)
    selection = SelectionSerializer(required=False)
    simulation = SimulationSerializer(required=False)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, default=0)
    threads = serializers.IntegerField(min_value=1, required=False)
    output_dir = serializers.CharField(default=lambda: controversy_setting('OUTPUT_DIR'))
    method = serializers.ChoiceField(choices=[method.value for method in Method], default=Method.AUTO.value)
    exact_node_limit = serializers.IntegerField(
        min_value=1, default=lambda: controversy_setting('EXACT_NODE_LIMIT')
    )

    def validate(self, attrs):
        given = [name for name in ('files', 'synthetic') if attrs.get(name) is not None]
        if len(given) != 1:
            raise serializers.ValidationError(
                'Exactly one input mode is required: "files" or "synthetic".'
            )
        for name in ('walk', 'selection', 'simulation'):
            if attrs.get(name) is None:
                attrs[name] = self.fields[name].run_validation({})
        return attrs

    def create(self, validated_data):
        """
        Resolve defaults and per-stage seeds into an ExperimentConfig.

        Args:
            validated_data: Dictionary containing validated data

        Returns:
            ExperimentConfig instance
        """
        seed = validated_data['seed']
        threads = validated_data.get('threads') or controversy_setting('THREADS')

        walk_data = dict(validated_data['walk'])
        walk_data.setdefault('seed', derive_seed(seed, 'walks'))
        walk_data.setdefault('threads', threads)
        walk = WalkConfig(**walk_data)

        files = synthetic = None
        if validated_data.get('files') is not None:
            files = self.fields['files'].create(validated_data['files'])
        else:
            synthetic_data = validated_data['synthetic']
            graph_data = dict(synthetic_data['graph'])
            graph_data.setdefault('seed', derive_seed(seed, 'graph'))
            pool = None
            if synthetic_data.get('pool') is not None:
                pool_data = dict(synthetic_data['pool'])
                pool_data.setdefault('seed', derive_seed(seed, 'pool'))
                pool = CandidatePoolParams(**pool_data)
            synthetic = SyntheticInputs(graph=PolarizedGraphParams(**graph_data), pool=pool)

        selection = validated_data['selection']
        simulation = validated_data['simulation']
        config = ExperimentConfig(
            walk=walk,
            files=files,
            synthetic=synthetic,
            k=selection['k'],
            candidate_multiplier=selection['candidate_multiplier'],
            k_max=simulation['k_max'],
            fractions=tuple(simulation['fractions']),
            trials=simulation['trials'],
            strategies=tuple(Strategy(value) for value in simulation['strategies']),
            output_dir=Path(validated_data['output_dir']),
            seed=seed,
            method=Method(validated_data['method']),
            exact_node_limit=validated_data['exact_node_limit'],
            random_fixed_seed=derive_seed(seed, 'random_fixed'),
            unfollow_seed=derive_seed(seed, 'unfollow'),
        )
        return ExperimentConfigEchoSerializer.attach(config)


class ExperimentConfigEchoSerializer(serializers.Serializer):
    """Flat, JSON-ready rendering of a resolved ExperimentConfig for manifests."""

    seed = serializers.IntegerField()
    method = serializers.SerializerMethodField()
    exact_node_limit = serializers.IntegerField()
    walk = serializers.SerializerMethodField()
    inputs = serializers.SerializerMethodField()
    selection = serializers.SerializerMethodField()
    simulation = serializers.SerializerMethodField()

    @classmethod
    def attach(cls, config: ExperimentConfig) -> ExperimentConfig:
        config.echo.update(cls(config).data)
        return config

    def get_method(self, config):
        return config.method.value

    def get_walk(self, config):
        walk = config.walk
        return {
            'walks_per_side': walk.walks_per_side,
            'hub_count_per_side': walk.hub_count_per_side,
            'max_steps': walk.max_steps,
            'seed': walk.seed,
            'edge_mode': walk.edge_mode.value,
        }

    def get_inputs(self, config):
        if config.files is not None:
            return {
                'mode': 'files',
                'edges': str(config.files.edges),
                'partition': str(config.files.partition),
                'candidates': str(config.files.candidates) if config.files.candidates else None,
                'format': config.files.format,
            }
        graph = config.synthetic.graph
        pool = config.synthetic.pool
        return {
            'mode': 'synthetic',
            'graph': {
                'nodes_per_side': graph.nodes_per_side,
                'p_in': graph.p_in,
                'p_out': graph.p_out,
                'hub_count': graph.hub_count,
                'hub_in_degree_boost': graph.hub_in_degree_boost,
                'seed': graph.seed,
            },
            'pool': None if pool is None else {
                'pool_size': pool.pool_size,
                'degree_distribution': DegreeDistributionField().to_representation(pool.degree_distribution),
                'neutrality_distribution': NeutralityDistributionField().to_representation(
                    pool.neutrality_distribution
                ),
                'seed': pool.seed,
                'id_prefix': pool.id_prefix,
            },
        }

    def get_selection(self, config):
        return {'k': config.k, 'candidate_multiplier': config.candidate_multiplier}

    def get_simulation(self, config):
        return {
            'k_max': config.k_max,
            'fractions': list(config.fractions),
            'trials': config.trials,
            'strategies': [strategy.value for strategy in config.strategies],
            'random_fixed_seed': config.random_fixed_seed,
            'unfollow_seed': config.unfollow_seed,
        }


def validation_message(errors, prefix: str = '') -> str:
    """Flatten nested serializer errors into 'path: message' lines."""
    if isinstance(errors, dict):
        parts = []
        for key, value in errors.items():
            path = prefix if key == 'non_field_errors' else (f'{prefix}.{key}' if prefix else str(key))
            parts.append(validation_message(value, path))
        return '; '.join(part for part in parts if part)
    if isinstance(errors, list):
        if all(isinstance(item, str) for item in errors):
            messages = ' '.join(str(item) for item in errors)
            return f'{prefix}: {messages}' if prefix else messages
        return '; '.join(validation_message(item, f'{prefix}[{index}]') for index, item in enumerate(errors))
    return f'{prefix}: {errors}' if prefix else str(errors)


def build_experiment_config(document: dict) -> ExperimentConfig:
    """
    Validate a config document and resolve it.

    Raises:
        ConfigurationError: If the document does not validate
    """
    serializer = ExperimentConfigSerializer(data=document)
    if not serializer.is_valid():
        raise ConfigurationError(f'Invalid configuration: {validation_message(serializer.errors)}')
    try:
        return serializer.save()
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f'Invalid configuration: {exc}') from exc


# -- result rendering ------------------------------------------------------


class RwcEstimateSerializer(serializers.Serializer):
    p_xx = serializers.FloatField()
    p_xy = serializers.FloatField()
    p_yx = serializers.FloatField()
    p_yy = serializers.FloatField()
    rwc = serializers.FloatField()
    stderr_rwc = serializers.FloatField()
    completed_walks_x = serializers.IntegerField()
    completed_walks_y = serializers.IntegerField()
    discarded_walks = serializers.IntegerField()
    method = serializers.CharField()


class SelectedNodeSerializer(serializers.Serializer):
    node = serializers.IntegerField()
    external_id = serializers.CharField()
    delta_rwc = serializers.FloatField()
    in_degree = serializers.IntegerField(source='candidate.in_degree')
    followers_in_x = serializers.IntegerField(source='candidate.followers_in_x')
    followers_in_y = serializers.IntegerField(source='candidate.followers_in_y')


class AdditionPlanSerializer(serializers.Serializer):
    selected = SelectedNodeSerializer(many=True)
    baseline_rwc = serializers.FloatField()
    cumulative_rwc = serializers.ListField(child=serializers.FloatField())
    summed_rwc = serializers.ListField(child=serializers.FloatField())
    final_rwc = serializers.FloatField()
    requested_k = serializers.IntegerField()
    method = serializers.CharField()
    truncated = serializers.BooleanField()


class UnfollowCurveSerializer(serializers.Serializer):
    removal_fractions = serializers.ListField(child=serializers.FloatField())
    rwc_values = serializers.ListField(child=serializers.FloatField())
    min_values = serializers.ListField(child=serializers.FloatField())
    max_values = serializers.ListField(child=serializers.FloatField())
    baseline_rwc = serializers.FloatField()
    augmented_rwc = serializers.FloatField()
    trials = serializers.IntegerField()


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Serializer for recorded runs."""

    id = serializers.CharField(source='run_id', read_only=True)

    class Meta:
        model = ExperimentRun
        fields = ['id', 'command', 'seed', 'config', 'manifest', 'result_summary', 'created_at']
        read_only_fields = fields
