import copy
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings
from rest_framework import serializers

from polarization.estimator import Method
from polarization.exceptions import ConfigurationError
from polarization.graph_core import EdgeMode
from polarization.harness import deep_merge, load_experiment_config, parse_float_list, parse_name_list
from polarization.serializers import (
    CandidatePoolParamsSerializer,
    DegreeDistributionField,
    NeutralityDistributionField,
    build_experiment_config,
    parse_distribution,
    validation_message,
)
from polarization.simulation import DEFAULT_FRACTIONS, DegreeDistribution, NeutralityDistribution, Strategy
from polarization.utils import calculate_sha256, derive_seed, file_sha256, round_half_up

from .fixtures import SMALL_SYNTHETIC, write_config


class UtilsTestCase(SimpleTestCase):

    def test_calculate_sha256(self):
        self.assertEqual(
            calculate_sha256('hello'),
            '2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824',
        )

    def test_file_sha256_matches_text_hash(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'hello.txt'
            path.write_bytes(b'hello')

            self.assertEqual(file_sha256(path), calculate_sha256('hello'))

    def test_derive_seed(self):
        """
        Expected: reproducible, different per stage and per global seed
        """
        self.assertEqual(derive_seed(1, 'walks'), derive_seed(1, 'walks'))
        self.assertNotEqual(derive_seed(1, 'walks'), derive_seed(1, 'graph'))
        self.assertNotEqual(derive_seed(1, 'walks'), derive_seed(2, 'walks'))
        self.assertTrue(0 <= derive_seed(7, 'pool') < 2 ** 64)

    def test_round_half_up(self):
        self.assertEqual(round_half_up(2.5), 3)
        self.assertEqual(round_half_up(0.1 * 25), 3)
        self.assertEqual(round_half_up(2.4999), 2)
        self.assertEqual(round_half_up(0.8 * 50), 40)
        self.assertEqual(round_half_up(0.0), 0)


class DistributionFieldTestCase(SimpleTestCase):

    def test_parse_distribution(self):
        self.assertEqual(parse_distribution('uniform(10,150)'), ('uniform', ['10', '150']))
        self.assertEqual(parse_distribution(' Fixed( 50 ) '), ('fixed', ['50']))
        self.assertEqual(parse_distribution('uniform'), ('uniform', []))

    def test_parse_distribution_rejects_unknown(self):
        with self.assertRaises(serializers.ValidationError):
            parse_distribution('poisson(3)')

    def test_degree_field(self):
        field = DegreeDistributionField()

        self.assertEqual(field.to_internal_value('fixed(50)'), DegreeDistribution.fixed(50))
        self.assertEqual(field.to_internal_value('uniform(10,150)'), DegreeDistribution.uniform(10, 150))
        self.assertEqual(field.to_internal_value({'kind': 'uniform', 'low': 2, 'high': 4}), DegreeDistribution.uniform(2, 4))
        self.assertEqual(field.to_representation(DegreeDistribution.uniform(10, 150)), 'uniform(10,150)')

    def test_degree_field_errors(self):
        field = DegreeDistributionField()
        for value in ('fixed(1,2)', 'uniform(9,3)', 'fixed(x)', 12):
            with self.subTest(value=value), self.assertRaises(serializers.ValidationError):
                field.to_internal_value(value)

    def test_neutrality_field(self):
        field = NeutralityDistributionField()

        self.assertEqual(field.to_internal_value('fixed(0.5)'), NeutralityDistribution.fixed(0.5))
        self.assertEqual(field.to_internal_value('uniform'), NeutralityDistribution.uniform())
        with self.assertRaises(serializers.ValidationError):
            field.to_internal_value('fixed(0.9)')

    def test_pool_serializer_defaults(self):
        serializer = CandidatePoolParamsSerializer(data={'pool_size': 5})

        self.assertTrue(serializer.is_valid(), serializer.errors)
        pool = serializer.save()
        self.assertEqual(pool.degree_distribution, DegreeDistribution.uniform(10, 150))
        self.assertEqual(pool.neutrality_distribution, NeutralityDistribution.uniform())
        self.assertEqual(pool.id_prefix, 'c')


class ExperimentConfigTestCase(SimpleTestCase):
    """
    Test cases for resolving experiment config documents.
    """

    def document(self, **changes):
        document = {'synthetic': copy.deepcopy(SMALL_SYNTHETIC), 'seed': 11}
        document.update(changes)
        return document

    def test_defaults_and_derived_seeds(self):
        config = build_experiment_config(self.document())

        # Assert
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.k, 30)
        self.assertEqual(config.k_max, 30)
        self.assertEqual(config.fractions, DEFAULT_FRACTIONS)
        self.assertEqual(config.strategies, tuple(Strategy))
        self.assertIs(config.method, Method.AUTO)
        self.assertEqual(config.walk.seed, derive_seed(11, 'walks'))
        self.assertEqual(config.synthetic.graph.seed, derive_seed(11, 'graph'))
        self.assertEqual(config.synthetic.pool.seed, derive_seed(11, 'pool'))
        self.assertEqual(config.random_fixed_seed, derive_seed(11, 'random_fixed'))
        self.assertEqual(config.unfollow_seed, derive_seed(11, 'unfollow'))
        self.assertTrue(config.has_pool)

    def test_explicit_stage_seed_wins(self):
        document = self.document(walk={'seed': 99})

        config = build_experiment_config(document)

        self.assertEqual(config.walk.seed, 99)

    @override_settings(CONTROVERSY={'WALKS_PER_SIDE': 123, 'HUB_COUNT': 4, 'UNFOLLOW_TRIALS': 2, 'THREADS': 3})
    def test_settings_supply_defaults(self):
        config = build_experiment_config(self.document())

        # Assert
        self.assertEqual(config.walk.walks_per_side, 123)
        self.assertEqual(config.walk.hub_count_per_side, 4)
        self.assertEqual(config.walk.threads, 3)
        self.assertEqual(config.trials, 2)
        self.assertIs(config.walk.edge_mode, EdgeMode.SYMMETRIZED)

    def test_exactly_one_mode(self):
        files = {'edges': 'e.tsv', 'partition': 'p.tsv'}
        for document in ({'seed': 1}, self.document(files=files)):
            with self.subTest(document=document), self.assertRaises(ConfigurationError):
                build_experiment_config(document)

    def test_file_mode(self):
        config = build_experiment_config({'files': {'edges': 'e.tsv', 'partition': 'p.tsv', 'format': 'csv'}})

        self.assertEqual(config.files.edges, Path('e.tsv'))
        self.assertIsNone(config.files.candidates)
        self.assertFalse(config.has_pool)
        self.assertEqual(config.echo['inputs']['mode'], 'files')

    def test_invalid_values_are_reported_with_paths(self):
        document = self.document(simulation={'fractions': [0.0, 1.5]})

        with self.assertRaises(ConfigurationError) as context:
            build_experiment_config(document)

        self.assertIn('simulation.fractions', str(context.exception))

    def test_graph_parameter_checks(self):
        document = self.document()
        document['synthetic']['graph']['p_out'] = 0.9

        with self.assertRaises(ConfigurationError) as context:
            build_experiment_config(document)

        self.assertIn('synthetic.graph.p_out', str(context.exception))

    def test_echo_is_json_ready(self):
        config = build_experiment_config(self.document(method='exact'))

        # Assert
        self.assertEqual(config.echo['method'], 'exact')
        self.assertEqual(config.echo['inputs']['pool']['degree_distribution'], 'uniform(4,12)')
        self.assertEqual(config.echo['walk']['seed'], config.walk.seed)
        self.assertEqual(config.echo['simulation']['strategies'], [strategy.value for strategy in Strategy])

    def test_validation_message(self):
        errors = {'walk': {'walks_per_side': ['Too small.']}, 'non_field_errors': ['Bad mode.']}

        message = validation_message(errors)

        self.assertIn('walk.walks_per_side: Too small.', message)
        self.assertIn('Bad mode.', message)


class HarnessConfigTestCase(SimpleTestCase):

    def test_deep_merge(self):
        base = {'walk': {'walks_per_side': 10, 'seed': 1}, 'seed': 3}
        override = {'walk': {'walks_per_side': 20, 'threads': None}, 'seed': None, 'files': {'edges': None}}

        merged = deep_merge(base, override)

        # Assert
        self.assertEqual(merged, {'walk': {'walks_per_side': 20, 'seed': 1}, 'seed': 3})
        self.assertEqual(base['walk']['walks_per_side'], 10)

    def test_flags_override_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, {'synthetic': SMALL_SYNTHETIC, 'seed': 1, 'selection': {'k': 4}})

            config = load_experiment_config(path, {'seed': 2, 'selection': {'k': None}})

        self.assertEqual(config.seed, 2)
        self.assertEqual(config.k, 4)

    def test_list_flags(self):
        self.assertEqual(parse_float_list('0, 0.5,1'), [0.0, 0.5, 1.0])
        self.assertIsNone(parse_float_list(None))
        self.assertEqual(parse_name_list('popular_only, random_fixed'), ['popular_only', 'random_fixed'])
        with self.assertRaises(ConfigurationError):
            parse_float_list('0,half')
