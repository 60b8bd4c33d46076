from polarization.exceptions import ConfigurationError
from polarization.graph_core import write_candidate_pool, write_graph
from polarization.harness import ExperimentCommand, load_inputs


class Command(ExperimentCommand):
    help = 'Generate a synthetic polarized graph, its partition and a candidate pool.'
    command_name = 'generate'

    def run(self, config, manifest, options):
        if config.synthetic is None:
            raise ConfigurationError('generate needs a "synthetic" input section')
        inputs = load_inputs(config, manifest)

        with manifest.stage('write'):
            written = write_graph(inputs.graph, inputs.labeling, config.output_dir, stem='graph')
            if inputs.pool is not None:
                written.append(
                    write_candidate_pool(inputs.graph, inputs.pool, config.output_dir / 'candidates.tsv')
                )
        for path in written:
            manifest.add_output(path)
            self.stdout.write(str(path))
        return {
            'nodes': inputs.graph.node_count,
            'edges': inputs.graph.edge_count,
            'candidates': len(inputs.pool) if inputs.pool is not None else 0,
        }
