import json

import pandas as pd

from polarization.graph_core import add_candidates, write_graph
from polarization.harness import ExperimentCommand, load_inputs, write_json, write_table
from polarization.selection import neutrality_score, select_addition_plan
from polarization.serializers import AdditionPlanSerializer


class Command(ExperimentCommand):
    help = 'Choose the k candidates whose addition lowers RWC the most.'
    command_name = 'select'

    def add_command_arguments(self, parser):
        parser.add_argument('--k', type=int, help='Number of nodes to add')
        parser.add_argument('--candidate-multiplier', type=float, help='Evaluate ceil(multiplier * k) candidates')

    def command_overrides(self, options):
        return {
            'selection': {
                'k': options.get('k'),
                'candidate_multiplier': options.get('candidate_multiplier'),
            },
        }

    def run(self, config, manifest, options):
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
                f'returning a partial plan for k={config.k}.'
            )

        frame = pd.DataFrame({
            'rank': range(1, len(plan.selected) + 1),
            'node': [selected.external_id for selected in plan.selected],
            'in_degree': [selected.candidate.in_degree for selected in plan.selected],
            'neutrality': [
                neutrality_score(selected.candidate.followers_in_x, selected.candidate.followers_in_y)
                for selected in plan.selected
            ],
            'delta_rwc': [selected.delta_rwc for selected in plan.selected],
            'cumulative_rwc': plan.cumulative_rwc,
            'summed_rwc': plan.summed_rwc,
        })
        manifest.add_output(write_table(frame, config.output_dir / 'plan.csv'))
        manifest.add_output(write_json(config.output_dir / 'plan.json', {
            'config': config.echo,
            'plan': AdditionPlanSerializer(plan).data,
        }))

        augmented, labeling = add_candidates(inputs.graph, inputs.labeling, plan.candidates())
        for path in write_graph(augmented, labeling, config.output_dir, stem='augmented'):
            manifest.add_output(path)

        summary = {
            'baseline_rwc': plan.baseline_rwc,
            'final_rwc': plan.final_rwc,
            'selected': len(plan.selected),
            'truncated': plan.truncated,
        }
        self.stdout.write(json.dumps(summary, sort_keys=True))
        return summary
