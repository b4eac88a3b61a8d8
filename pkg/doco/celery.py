import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'doco.settings')

app = Celery('doco')

app.config_from_object('django.conf:settings', namespace='CELERY')

# Seed runs are CPU bound; keep them off the default queue
app.conf.task_routes = {
    'experiments.*': {'queue': 'experiments'},
}

app.autodiscover_tasks()
