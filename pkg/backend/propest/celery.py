"""
Celery configuration for the propest project.
"""
import os
from celery import Celery
from celery.signals import setup_logging, worker_ready

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'backend.propest.settings')

app = Celery('propest')

# Worker processes read the CELERY_* settings from Django
app.config_from_object('django.conf:settings', namespace='CELERY')


@setup_logging.connect
def config_loggers(*args, **kwargs):
    """Configure logging for Celery to use Django logging"""
    from logging.config import dictConfig
    from django.conf import settings
    dictConfig(settings.LOGGING)


@worker_ready.connect
def reset_simulation_slots(**kwargs):
    """
    Clear the simulation slot semaphore on worker startup.

    Slots held by a worker that crashed or was restarted would otherwise
    never be released.
    """
    import logging
    logger = logging.getLogger(__name__)
    try:
        from backend.apps.estimation.concurrency import limiter
        limiter.clear_all()
        logger.info("Cleared simulation slots on worker startup")
    except Exception as e:
        logger.error(f"Failed to clear simulation slots: {e}")


app.autodiscover_tasks()
