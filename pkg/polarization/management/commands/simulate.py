import dataclasses
import json

from polarization.harness import (
    ExperimentCommand,
    load_inputs,
    parse_float_list,
    parse_name_list,
    write_json,
    write_table,
)
from polarization.selection import select_addition_plan
from polarization.serializers import AdditionPlanSerializer, UnfollowCurveSerializer
from polarization.simulation import run_baseline_comparison, run_unfollow_simulation


class Command(ExperimentCommand):
    help = 'Compare selection strategies and simulate followers leaving the added nodes.'
    command_name = 'simulate'

    def add_command_arguments(self, parser):
        parser.add_argument('--k', type=int, help='Size of the addition plan used for the unfollow curve')
        parser.add_argument('--k-max', type=int, help='Largest k of the strategy comparison')
        parser.add_argument('--fractions', help='Comma-separated unfollow fractions, e.g. 0,0.2,0.5')
        parser.add_argument('--trials', type=int, help='Seeded trials per fraction')
        parser.add_argument(
            '--strategies',
            help='Comma-separated subset of popular_and_neutral,popular_only,random_fixed',
        )

    def command_overrides(self, options):
        return {
            'selection': {'k': options.get('k')},
            'simulation': {
                'k_max': options.get('k_max'),
                'fractions': parse_float_list(options.get('fractions')),
                'trials': options.get('trials'),
                'strategies': parse_name_list(options.get('strategies')),
            },
        }

    def run(self, config, manifest, options):
        if 0.0 not in config.fractions:
            self.stderr.write('Notice: fraction 0 was missing and has been added to the unfollow grid.')
            fractions = tuple(sorted(set(config.fractions) | {0.0}))
            config.echo['simulation']['fractions'] = list(fractions)
            config = dataclasses.replace(config, fractions=fractions)
            manifest.config = config

        inputs = load_inputs(config, manifest, require_pool=True)
        with manifest.stage('select'):
            plan = select_addition_plan(
                inputs.graph,
                inputs.labeling,
                inputs.pool,
                config.k,
                config.candidate_multiplier,
                config.walk,
                config.method,
                config.exact_node_limit,
            )
        if plan.truncated:
            self.stderr.write(
                f'Warning: the candidate pool holds {len(plan.selected)} node(s); '
                f'the unfollow simulation uses a partial plan for k={config.k}.'
            )

        with manifest.stage('baselines'):
            table = run_baseline_comparison(
                inputs.graph,
                inputs.labeling,
                inputs.pool,
                config.k_max,
                config.walk,
                strategies=config.strategies,
                candidate_multiplier=config.candidate_multiplier,
                seed=config.random_fixed_seed,
                method=config.method,
                plan=plan if config.k >= config.k_max else None,
                node_limit=config.exact_node_limit,
            )
        with manifest.stage('unfollow'):
            curve = run_unfollow_simulation(
                inputs.graph,
                inputs.labeling,
                plan,
                config.fractions,
                config.trials,
                config.walk,
                seed=config.unfollow_seed,
                method=config.method,
                node_limit=config.exact_node_limit,
            )

        out = config.output_dir
        manifest.add_output(write_table(table, out / 'baseline.csv'))
        manifest.add_output(write_json(out / 'baseline.json', {
            'config': config.echo,
            'rows': table.to_dict(orient='records'),
        }))
        manifest.add_output(write_table(curve.to_frame(), out / 'unfollow.csv'))
        manifest.add_output(write_json(out / 'unfollow.json', {
            'config': config.echo,
            'curve': UnfollowCurveSerializer(curve).data,
        }))
        manifest.add_output(write_json(out / 'plan.json', {
            'config': config.echo,
            'plan': AdditionPlanSerializer(plan).data,
        }))

        summary = {
            'baseline_rwc': curve.baseline_rwc,
            'augmented_rwc': curve.augmented_rwc,
            'strategies': sorted(table['strategy'].unique().tolist()),
            'final_rwc_by_strategy': {
                strategy: float(rows.sort_values('k')['rwc'].iloc[-1])
                for strategy, rows in table.groupby('strategy')
            },
        }
        self.stdout.write(json.dumps(summary, sort_keys=True))
        return summary
