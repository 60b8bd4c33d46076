import logging

from rest_framework.views import APIView
from rest_framework.response import Response
from rest_framework import status
from django.views.decorators.csrf import csrf_exempt
from django.utils.decorators import method_decorator

from .config import controversy_setting
from .estimator import Method, measure_rwc
from .exceptions import ConfigurationError, ControversyError, DegeneratePartitionError
from .models import ExperimentRun
from .serializers import (
    ExperimentRunSerializer,
    PolarizedGraphParamsSerializer,
    RwcEstimateSerializer,
    WalkConfigSerializer,
)
from .simulation import generate_polarized_graph
from .utils import derive_seed

logger = logging.getLogger(__name__)

RUN_COMMANDS = ('rwc', 'select', 'simulate', 'generate')


@method_decorator(csrf_exempt, name='dispatch')
class RunListView(APIView):
    """
    API view to list recorded experiment runs.

    GET: List runs, optionally filtered by command and seed
    """

    def get(self, request):
        """
        Handle GET request to retrieve recorded runs.

        Args:
            request: HTTP request object with query parameters

        Returns:
            Response with run data, count, and applied filters
        """
        queryset = ExperimentRun.objects.all()
        filters_applied = {}
        errors = {}

        command = request.query_params.get('command')
        seed = request.query_params.get('seed')

        if command is not None:
            if command not in RUN_COMMANDS:
                errors['command'] = f'Must be one of: {", ".join(RUN_COMMANDS)}.'
            else:
                queryset = queryset.filter(command=command)
                filters_applied['command'] = command

        if seed is not None:
            try:
                seed_int = int(seed)
                if seed_int < 0:
                    errors['seed'] = 'Must be a non-negative integer.'
                else:
                    queryset = queryset.filter(seed=seed_int)
                    filters_applied['seed'] = seed_int
            except ValueError:
                errors['seed'] = 'Must be a valid integer.'

        if errors:
            return Response(
                {
                    'error': 'Invalid query parameters',
                    'details': errors
                },
                status=status.HTTP_400_BAD_REQUEST
            )

        results = queryset.all()
        serializer = ExperimentRunSerializer(results, many=True)
        return Response(
            {
                'data': serializer.data,
                'count': results.count(),
                'filters_applied': filters_applied
            },
            status=status.HTTP_200_OK
        )


@method_decorator(csrf_exempt, name='dispatch')
class RunRetrieveDeleteView(APIView):
    """
    API view to retrieve or delete one recorded run.

    GET: Retrieve a run
    DELETE: Delete a run
    """

    def get(self, request, run_id):
        try:
            run = ExperimentRun.objects.get(run_id=run_id)
        except ExperimentRun.DoesNotExist:
            return Response(
                {'error': 'Run does not exist'},
                status=status.HTTP_404_NOT_FOUND
            )
        return Response(ExperimentRunSerializer(run).data, status=status.HTTP_200_OK)

    def delete(self, request, run_id):
        """
        Handle DELETE request to remove a recorded run.

        Returns:
            204 No Content on success, 404 if not found
        """
        deleted, _ = ExperimentRun.objects.filter(run_id=run_id).delete()
        if not deleted:
            return Response(
                {'error': 'Run does not exist'},
                status=status.HTTP_404_NOT_FOUND
            )
        return Response(status=status.HTTP_204_NO_CONTENT)


@method_decorator(csrf_exempt, name='dispatch')
class RwcView(APIView):
    """
    API view to measure RWC of a small synthetic polarized graph.

    POST body:
        - synthetic (object): two-block graph parameters
        - walk (object, optional): random walk settings
        - exact (bool, optional): force the exact solver
        - seed (int, optional): global seed for stage seeds not given explicitly
    """

    def post(self, request):
        """
        Handle POST request to generate a graph and measure its RWC.

        Status Codes:
            - 200 OK: Estimate computed
            - 400 Bad Request: Invalid or oversized parameters
            - 422 Unprocessable Entity: The graph cannot be measured
        """
        if not isinstance(request.data, dict) or not isinstance(request.data.get('synthetic'), dict):
            return Response(
                {'error': 'The synthetic field is required and must be an object.'},
                status=status.HTTP_400_BAD_REQUEST
            )

        seed = request.data.get('seed', 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            return Response(
                {'error': 'Invalid parameters', 'details': {'seed': 'Must be a non-negative integer.'}},
                status=status.HTTP_400_BAD_REQUEST
            )

        graph_serializer = PolarizedGraphParamsSerializer(data=request.data['synthetic'])
        walk_serializer = WalkConfigSerializer(data=request.data.get('walk') or {})
        errors = {}
        if not graph_serializer.is_valid():
            errors['synthetic'] = graph_serializer.errors
        if not walk_serializer.is_valid():
            errors['walk'] = walk_serializer.errors
        if errors:
            return Response(
                {'error': 'Invalid parameters', 'details': errors},
                status=status.HTTP_400_BAD_REQUEST
            )

        max_nodes = controversy_setting('API_MAX_NODES')
        node_count = 2 * graph_serializer.validated_data['nodes_per_side']
        if node_count > max_nodes:
            return Response(
                {
                    'error': 'Graph too large',
                    'details': f'{node_count} nodes requested, this endpoint allows {max_nodes}'
                },
                status=status.HTTP_400_BAD_REQUEST
            )

        graph_data = dict(graph_serializer.validated_data)
        graph_data.setdefault('seed', derive_seed(seed, 'graph'))
        walk_data = dict(walk_serializer.validated_data)
        walk_data.setdefault('seed', derive_seed(seed, 'walks'))
        method = Method.EXACT if request.data.get('exact') is True else Method.AUTO

        try:
            graph, labeling = generate_polarized_graph(graph_serializer.create(graph_data))
            estimate = measure_rwc(
                graph, labeling, walk_serializer.create(walk_data), method, controversy_setting('EXACT_NODE_LIMIT')
            )
        except DegeneratePartitionError as exc:
            return Response(
                {'error': 'Degenerate partition', 'details': str(exc)},
                status=status.HTTP_422_UNPROCESSABLE_ENTITY
            )
        except ConfigurationError as exc:
            return Response(
                {'error': 'Invalid parameters', 'details': str(exc)},
                status=status.HTTP_400_BAD_REQUEST
            )
        except ControversyError as exc:
            logger.warning('RWC request failed: %s', exc)
            return Response(
                {'error': 'Estimation failed', 'details': str(exc)},
                status=status.HTTP_422_UNPROCESSABLE_ENTITY
            )

        return Response(
            {
                'nodes': graph.node_count,
                'edges': graph.edge_count,
                'estimate': RwcEstimateSerializer(estimate).data
            },
            status=status.HTTP_200_OK
        )
