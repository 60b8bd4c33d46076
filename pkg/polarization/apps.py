from django.apps import AppConfig


class PolarizationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'polarization'
    verbose_name = 'Polarization experiments'
