"""
Estimation app configuration
"""
from django.apps import AppConfig


class EstimationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'backend.apps.estimation'
    verbose_name = 'Estimation'
