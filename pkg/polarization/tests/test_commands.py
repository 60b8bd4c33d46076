import copy
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from polarization.exceptions import EstimationFailedError
from polarization.graph_core import load_candidate_pool, load_edge_list, load_partition
from polarization.models import ExperimentRun

from .fixtures import SMALL_SYNTHETIC, write_config, write_path_files


class CommandTestCase(TestCase):
    """Runs management commands inside a scratch directory."""

    def setUp(self):
        self.scratch = tempfile.TemporaryDirectory()
        self.root = Path(self.scratch.name)
        self.addCleanup(self.scratch.cleanup)

    def synthetic_config(self, name='config.json', **changes):
        document = {'synthetic': copy.deepcopy(SMALL_SYNTHETIC), 'seed': 5, 'walk': {'walks_per_side': 2000}}
        for key, value in changes.items():
            if isinstance(value, dict) and isinstance(document.get(key), dict):
                document[key].update(value)
            else:
                document[key] = value
        return write_config(self.root, document, name)

    def call(self, command, *args, **options):
        stdout, stderr = StringIO(), StringIO()
        call_command(command, *args, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue(), stderr.getvalue()

    def assertExitCode(self, code, command, *args, **options):
        with self.assertRaises(CommandError) as context:
            self.call(command, *args, **options)
        self.assertEqual(context.exception.returncode, code)
        return context.exception


class RwcCommandTestCase(CommandTestCase):

    def test_disconnected_sides_print_one(self):
        """
        Given: A synthetic config with p_out = 0
        Expected: the printed estimate has rwc 1.0
        """
        document = copy.deepcopy(SMALL_SYNTHETIC)
        document['graph']['p_out'] = 0.0
        config = self.synthetic_config(synthetic=document)

        stdout, _ = self.call('rwc', config=str(config), out=str(self.root / 'out'))

        # Assert
        estimate = json.loads(stdout.splitlines()[0])
        self.assertEqual(estimate['rwc'], 1.0)
        self.assertTrue((self.root / 'out' / 'rwc.json').exists())
        self.assertTrue((self.root / 'out' / 'manifest.json').exists())

    def test_same_config_gives_identical_files(self):
        config = self.synthetic_config(method='monte_carlo')

        self.call('rwc', config=str(config), out=str(self.root / 'first'))
        self.call('rwc', config=str(config), out=str(self.root / 'second'))

        self.assertEqual(
            (self.root / 'first' / 'rwc.json').read_bytes(),
            (self.root / 'second' / 'rwc.json').read_bytes(),
        )

    def test_exact_flag_agrees_with_monte_carlo(self):
        config = self.synthetic_config(method='monte_carlo')

        sampled, _ = self.call('rwc', config=str(config), out=str(self.root / 'mc'))
        solved, _ = self.call('rwc', config=str(config), out=str(self.root / 'exact'), exact=True)

        # Assert
        sampled, solved = json.loads(sampled.splitlines()[0]), json.loads(solved.splitlines()[0])
        self.assertEqual(sampled['method'], 'monte_carlo')
        self.assertEqual(solved['method'], 'exact')
        self.assertLessEqual(abs(sampled['rwc'] - solved['rwc']), 3 * sampled['stderr_rwc'])

    def test_potential_graph(self):
        config = self.synthetic_config()

        stdout, _ = self.call('rwc', config=str(config), out=str(self.root / 'out'), potential=True)

        payload = json.loads((self.root / 'out' / 'rwc.json').read_text())
        self.assertEqual(set(payload), {'graph', 'potential'})
        self.assertIn('potential', stdout)

    def test_potential_needs_pool(self):
        document = copy.deepcopy(SMALL_SYNTHETIC)
        del document['pool']
        config = self.synthetic_config(synthetic=document)

        self.assertExitCode(2, 'rwc', config=str(config), out=str(self.root / 'out'), potential=True)

    def test_file_inputs_from_flags(self):
        """
        Given: The path fixture written to disk, hub count 1 from the config
        Expected: exact RWC 0.6
        """
        edges, partition = write_path_files(self.root)
        config = write_config(self.root, {'walk': {'hub_count_per_side': 1}})

        stdout, _ = self.call(
            'rwc', config=str(config), edges=str(edges), partition=str(partition), out=str(self.root / 'out'),
        )

        estimate = json.loads(stdout.splitlines()[0])
        self.assertAlmostEqual(estimate['rwc'], 0.6, places=10)
        self.assertEqual(estimate['method'], 'exact')

    def test_missing_input_mode(self):
        config = write_config(self.root, {'seed': 1})

        error = self.assertExitCode(2, 'rwc', config=str(config), out=str(self.root / 'out'))

        self.assertIn('Exactly one input mode', str(error))

    def test_both_input_modes(self):
        edges, partition = write_path_files(self.root)
        config = self.synthetic_config()

        self.assertExitCode(
            2, 'rwc', config=str(config), edges=str(edges), partition=str(partition), out=str(self.root / 'out'),
        )

    def test_invalid_json(self):
        path = self.root / 'broken.json'
        path.write_text('{"synthetic": ', encoding='utf-8')

        error = self.assertExitCode(2, 'rwc', config=str(path), out=str(self.root / 'out'))

        self.assertIn('invalid JSON', str(error))

    def test_missing_config_file(self):
        self.assertExitCode(2, 'rwc', config=str(self.root / 'nope.json'), out=str(self.root / 'out'))

    def test_invalid_field(self):
        config = self.synthetic_config(walk={'walks_per_side': 0})

        error = self.assertExitCode(2, 'rwc', config=str(config), out=str(self.root / 'out'))

        self.assertIn('walk.walks_per_side', str(error))

    def test_estimation_failure_exit_code(self):
        config = self.synthetic_config()

        with mock.patch(
            'polarization.management.commands.rwc.measure_rwc',
            side_effect=EstimationFailedError('no walk completed'),
        ):
            self.assertExitCode(3, 'rwc', config=str(config), out=str(self.root / 'out'))

    def test_run_is_recorded_once_per_config(self):
        config = self.synthetic_config()

        self.call('rwc', config=str(config), out=str(self.root / 'out'))
        self.call('rwc', config=str(config), out=str(self.root / 'out'))

        # Assert
        run = ExperimentRun.objects.get()
        manifest = json.loads((self.root / 'out' / 'manifest.json').read_text())
        self.assertEqual(run.command, 'rwc')
        self.assertEqual(run.seed, 5)
        self.assertEqual(run.run_id, manifest['run_id'])
        self.assertIn('rwc.json', manifest['outputs'])
        self.assertIn('rwc', manifest['timings'])


class SelectCommandTestCase(CommandTestCase):

    def test_plan_files(self):
        config = self.synthetic_config()

        stdout, _ = self.call('select', config=str(config), out=str(self.root / 'out'), k=3)

        # Assert
        out = self.root / 'out'
        plan = pd.read_csv(out / 'plan.csv')
        self.assertEqual(
            list(plan.columns),
            ['rank', 'node', 'in_degree', 'neutrality', 'delta_rwc', 'cumulative_rwc', 'summed_rwc'],
        )
        self.assertEqual(plan['rank'].tolist(), [1, 2, 3])
        payload = json.loads((out / 'plan.json').read_text())
        self.assertEqual(payload['config']['selection']['k'], 3)
        self.assertEqual(len(payload['plan']['selected']), 3)
        self.assertTrue((out / 'augmented.added.tsv').exists())
        self.assertEqual(json.loads(stdout)['selected'], 3)

    def test_short_pool_warns(self):
        edges, partition = write_path_files(self.root)
        candidates = self.root / 'candidates.tsv'
        candidates.write_text('1\tbridge\n4\tbridge\n', encoding='utf-8')
        config = write_config(self.root, {'walk': {'hub_count_per_side': 1}})

        stdout, stderr = self.call(
            'select', config=str(config), edges=str(edges), partition=str(partition),
            candidates=str(candidates), out=str(self.root / 'out'), k=3,
        )

        # Assert
        self.assertIn('partial plan', stderr)
        summary = json.loads(stdout)
        self.assertTrue(summary['truncated'])
        self.assertEqual(summary['selected'], 1)
        self.assertLess(summary['final_rwc'], summary['baseline_rwc'])

    def test_empty_pool_file(self):
        edges, partition = write_path_files(self.root)
        candidates = self.root / 'candidates.tsv'
        candidates.write_text('# follower\tcandidate\n', encoding='utf-8')

        self.assertExitCode(
            2, 'select', edges=str(edges), partition=str(partition), candidates=str(candidates),
            out=str(self.root / 'out'),
        )

    def test_missing_pool(self):
        edges, partition = write_path_files(self.root)

        error = self.assertExitCode(
            2, 'select', edges=str(edges), partition=str(partition), out=str(self.root / 'out'),
        )

        self.assertIn('files.candidates', str(error))


class SimulateCommandTestCase(CommandTestCase):

    def test_missing_zero_fraction_is_added(self):
        config = self.synthetic_config()

        _, stderr = self.call(
            'simulate', config=str(config), out=str(self.root / 'out'),
            k=2, k_max=2, fractions='0.5,1', trials=1, strategies='popular_only',
        )

        # Assert
        self.assertIn('Notice: fraction 0', stderr)
        curve = pd.read_csv(self.root / 'out' / 'unfollow.csv')
        self.assertEqual(curve['fraction'].tolist(), [0.0, 0.5, 1.0])
        payload = json.loads((self.root / 'out' / 'unfollow.json').read_text())
        self.assertEqual(payload['config']['simulation']['fractions'], [0.0, 0.5, 1.0])

    def test_strategy_subset(self):
        config = self.synthetic_config()

        self.call(
            'simulate', config=str(config), out=str(self.root / 'out'),
            k=2, k_max=2, fractions='0,1', trials=1, strategies='popular_only',
        )

        table = pd.read_csv(self.root / 'out' / 'baseline.csv')
        self.assertEqual(list(table.columns), ['strategy', 'k', 'rwc'])
        self.assertEqual(set(table['strategy']), {'popular_only'})
        self.assertEqual(table['k'].tolist(), [0, 1, 2])

    def test_unknown_strategy(self):
        config = self.synthetic_config()

        self.assertExitCode(
            2, 'simulate', config=str(config), out=str(self.root / 'out'), strategies='celebrities_only',
        )

    def test_no_removal_matches_selected_plan(self):
        """
        Given: select and simulate with the same config and k
        Expected: the f = 0 unfollow value equals the plan's final RWC
        """
        config = self.synthetic_config()

        self.call('select', config=str(config), out=str(self.root / 'select'), k=2)
        self.call(
            'simulate', config=str(config), out=str(self.root / 'simulate'),
            k=2, k_max=2, fractions='0,1', trials=2, strategies='popular_and_neutral',
        )

        # Assert
        plan = json.loads((self.root / 'select' / 'plan.json').read_text())['plan']
        curve = json.loads((self.root / 'simulate' / 'unfollow.json').read_text())['curve']
        self.assertAlmostEqual(curve['rwc_values'][0], plan['final_rwc'], places=12)
        table = pd.read_csv(self.root / 'simulate' / 'baseline.csv')
        self.assertAlmostEqual(table['rwc'].iloc[-1], plan['final_rwc'], places=12)


class GenerateCommandTestCase(CommandTestCase):

    def test_written_files_load_back(self):
        config = self.synthetic_config()

        stdout, _ = self.call('generate', config=str(config), out=str(self.root / 'out'))

        # Assert
        out = self.root / 'out'
        self.assertEqual(
            [Path(line).name for line in stdout.splitlines()],
            ['graph.edges.tsv', 'graph.partition.tsv', 'candidates.tsv'],
        )
        graph = load_edge_list(out / 'graph.edges.tsv')
        labeling = load_partition(out / 'graph.partition.tsv', graph)
        pool = load_candidate_pool(out / 'candidates.tsv', graph, labeling)
        self.assertEqual(graph.node_count, 60)
        self.assertEqual(len(pool), 12)
        summary = ExperimentRun.objects.get(command='generate').result_summary
        self.assertEqual(summary['edges'], graph.edge_count)

    def test_seed_controls_output(self):
        config = self.synthetic_config()

        self.call('generate', config=str(config), out=str(self.root / 'a'))
        self.call('generate', config=str(config), out=str(self.root / 'b'))
        self.call('generate', config=str(config), out=str(self.root / 'c'), seed=6)

        # Assert
        hashes = {
            name: json.loads((self.root / name / 'manifest.json').read_text())['outputs']
            for name in 'abc'
        }
        self.assertEqual(hashes['a'], hashes['b'])
        self.assertNotEqual(hashes['a']['graph.edges.tsv'], hashes['c']['graph.edges.tsv'])

    def test_needs_synthetic_mode(self):
        edges, partition = write_path_files(self.root)

        self.assertExitCode(2, 'generate', edges=str(edges), partition=str(partition), out=str(self.root / 'out'))
