import json

from polarization.estimator import measure_rwc
from polarization.graph_core import potential_graph
from polarization.harness import ExperimentCommand, load_inputs, write_json
from polarization.selection import choose_method
from polarization.serializers import RwcEstimateSerializer


class Command(ExperimentCommand):
    help = 'Measure the Random Walk Controversy score of a graph.'
    command_name = 'rwc'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--potential',
            action='store_true',
            help='Also measure the potential graph (G plus every candidate)',
        )

    def run(self, config, manifest, options):
        inputs = load_inputs(config, manifest, require_pool=options.get('potential', False))
        extra_nodes = len(inputs.pool) if options.get('potential') else 0
        method = choose_method(inputs.graph, extra_nodes, config.method, config.exact_node_limit)

        with manifest.stage('rwc'):
            estimate = measure_rwc(inputs.graph, inputs.labeling, config.walk, method, config.exact_node_limit)
        payload = {'graph': RwcEstimateSerializer(estimate).data}
        summary = {'rwc': estimate.rwc, 'method': estimate.method}

        if options.get('potential'):
            with manifest.stage('potential_rwc'):
                graph, labeling = potential_graph(inputs.graph, inputs.labeling, inputs.pool)
                potential = measure_rwc(graph, labeling, config.walk, method, config.exact_node_limit)
            payload['potential'] = RwcEstimateSerializer(potential).data
            summary['potential_rwc'] = potential.rwc

        manifest.add_output(write_json(config.output_dir / 'rwc.json', payload))
        self.stdout.write(json.dumps(payload['graph'], sort_keys=True))
        if 'potential' in payload:
            self.stdout.write(json.dumps({'potential': payload['potential']}, sort_keys=True))
        return summary
