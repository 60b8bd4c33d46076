"""Pytest wiring: configure Django and create the test database, as
`manage.py test` would, so the Django TestCases run under pytest."""
import os

import django
import pytest

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'controversy_lab.settings')
# Development mode for tests: with DEBUG off the settings force an HTTPS
# redirect (SECURE_SSL_REDIRECT) and every test-client request gets a 301.
os.environ.setdefault('DEBUG', 'True')
django.setup()


@pytest.fixture(scope='session', autouse=True)
def _django_test_environment():
    from django.test.utils import (
        setup_databases,
        setup_test_environment,
        teardown_databases,
        teardown_test_environment,
    )

    setup_test_environment()
    old_config = setup_databases(verbosity=0, interactive=False)
    yield
    teardown_databases(old_config, verbosity=0)
    teardown_test_environment()
