from django.test import TestCase, override_settings
from rest_framework import status
from rest_framework.test import APIClient

from polarization.models import ExperimentRun


def make_run(run_id, command='rwc', seed=0):
    return ExperimentRun.objects.create(
        run_id=run_id,
        command=command,
        seed=seed,
        config={'seed': seed},
        manifest={'run_id': run_id, 'outputs': {}},
        result_summary={'rwc': 0.5},
    )


class RunListEndpointTestCase(TestCase):
    """
    Test cases for GET /runs/ endpoint.

    Tests cover:
    - Listing every recorded run (200)
    - Filtering by command and seed
    - Invalid query parameters (400)
    """

    def setUp(self):
        """Set up test client and a few recorded runs."""
        self.client = APIClient()
        self.url = '/runs/'
        make_run('a' * 64, command='rwc', seed=1)
        make_run('b' * 64, command='select', seed=1)
        make_run('c' * 64, command='select', seed=2)

    def test_list_returns_200(self):
        """
        Given: Three recorded runs
        When: GET request is made to /runs/
        Then: Response status is 200 and all runs are listed
        """
        response = self.client.get(self.url)

        # Assert status code
        self.assertEqual(response.status_code, status.HTTP_200_OK)

        # Assert response structure
        self.assertEqual(response.data['count'], 3)
        self.assertEqual(response.data['filters_applied'], {})
        self.assertEqual(
            set(response.data['data'][0]),
            {'id', 'command', 'seed', 'config', 'manifest', 'result_summary', 'created_at'},
        )

    def test_filter_by_command_and_seed(self):
        response = self.client.get(self.url, {'command': 'select', 'seed': '2'})

        # Assert
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(response.data['data'][0]['id'], 'c' * 64)
        self.assertEqual(response.data['filters_applied'], {'command': 'select', 'seed': 2})

    def test_unknown_command_returns_400(self):
        response = self.client.get(self.url, {'command': 'plot'})

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('command', response.data['details'])

    def test_invalid_seed_returns_400(self):
        """
        Given: seed values that are not non-negative integers
        Then: Response status is 400 with a seed error
        """
        for seed in ('abc', '-1'):
            response = self.client.get(self.url, {'seed': seed})

            self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
            self.assertIn('seed', response.data['details'])


class RunDetailEndpointTestCase(TestCase):
    """
    Test cases for GET and DELETE /runs/{run_id}/ endpoint.
    """

    def setUp(self):
        self.client = APIClient()
        self.run = make_run('d' * 64, command='simulate', seed=9)
        self.url = f'/runs/{self.run.run_id}/'

    def test_get_existing_returns_200(self):
        response = self.client.get(self.url)

        # Assert
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['id'], self.run.run_id)
        self.assertEqual(response.data['command'], 'simulate')
        self.assertEqual(response.data['result_summary'], {'rwc': 0.5})

    def test_get_nonexistent_returns_404(self):
        response = self.client.get('/runs/missing/')

        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
        self.assertIn('error', response.data)

    def test_delete_existing_returns_204(self):
        """
        Given: A recorded run
        When: DELETE request is made to /runs/{run_id}/
        Then: Response status is 204 and the run is gone
        """
        response = self.client.delete(self.url)

        # Assert status code
        self.assertEqual(response.status_code, status.HTTP_204_NO_CONTENT)

        # Verify run was deleted
        self.assertFalse(ExperimentRun.objects.filter(run_id=self.run.run_id).exists())

    def test_delete_twice_returns_404(self):
        self.client.delete(self.url)

        response = self.client.delete(self.url)

        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)


class RwcEndpointTestCase(TestCase):
    """
    Test cases for POST /rwc/ endpoint.

    Tests cover:
    - Measuring a small synthetic graph (200)
    - Missing or invalid parameters (400)
    - The node-count limit (400)
    """

    def setUp(self):
        self.client = APIClient()
        self.url = '/rwc/'
        self.synthetic = {
            'nodes_per_side': 30,
            'p_in': 0.15,
            'p_out': 0.0,
            'hub_count': 2,
            'hub_in_degree_boost': 10,
        }

    def test_post_success_returns_200(self):
        """
        Given: A two-block graph without cross edges
        When: POST request is made to /rwc/ with exact = true
        Then: Response status is 200 and RWC is 1.0
        """
        payload = {'synthetic': self.synthetic, 'walk': {'hub_count_per_side': 2}, 'exact': True, 'seed': 3}

        response = self.client.post(self.url, payload, format='json')

        # Assert status code
        self.assertEqual(response.status_code, status.HTTP_200_OK)

        # Assert response content
        self.assertEqual(response.data['nodes'], 60)
        self.assertEqual(response.data['estimate']['rwc'], 1.0)
        self.assertEqual(response.data['estimate']['method'], 'exact')

    def test_post_is_deterministic(self):
        payload = {
            'synthetic': dict(self.synthetic, p_out=0.01),
            'walk': {'walks_per_side': 500},
            'seed': 4,
        }

        first = self.client.post(self.url, payload, format='json')
        second = self.client.post(self.url, payload, format='json')

        self.assertEqual(first.data, second.data)

    def test_missing_synthetic_returns_400(self):
        response = self.client.post(self.url, {'exact': True}, format='json')

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)

    def test_list_body_returns_400(self):
        """
        Given: A JSON array instead of an object
        Then: Response status is 400, not a server error
        """
        response = self.client.post(self.url, [{'synthetic': self.synthetic}], format='json')

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('synthetic', response.data['error'])

    def test_invalid_parameters_return_400(self):
        """
        Given: p_out larger than p_in and a negative walk count
        Then: Response status is 400 with details for both sections
        """
        payload = {'synthetic': dict(self.synthetic, p_out=0.5), 'walk': {'walks_per_side': -1}}

        response = self.client.post(self.url, payload, format='json')

        # Assert
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('synthetic', response.data['details'])
        self.assertIn('walk', response.data['details'])

    def test_invalid_seed_returns_400(self):
        response = self.client.post(self.url, {'synthetic': self.synthetic, 'seed': 'x'}, format='json')

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)

    @override_settings(CONTROVERSY={'API_MAX_NODES': 50})
    def test_oversized_graph_returns_400(self):
        response = self.client.post(self.url, {'synthetic': self.synthetic}, format='json')

        # Assert
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(response.data['error'], 'Graph too large')
