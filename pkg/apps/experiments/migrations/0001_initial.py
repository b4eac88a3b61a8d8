import uuid

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('name', models.CharField(max_length=255)),
                ('config', models.JSONField()),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'),
                                                     ('verified', 'Verified'),
                                                     ('verification_failed', 'Verification Failed'),
                                                     ('failed', 'Failed')],
                                            default='running', max_length=20)),
                ('output_dir', models.CharField(max_length=1024)),
                ('version', models.CharField(max_length=32)),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('verification', models.JSONField(blank=True, default=dict)),
                ('error', models.TextField(blank=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'db_table': 'experiment_runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='SeedRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('seed', models.PositiveIntegerField()),
                ('rounds', models.PositiveIntegerField(default=0)),
                ('trace_path', models.CharField(max_length=1024)),
                ('trace_sha256', models.CharField(max_length=64)),
                ('cells_path', models.CharField(blank=True, max_length=1024)),
                ('final_regrets', models.JSONField(default=dict)),
                ('lag', models.JSONField(default=dict)),
                ('max_bits', models.PositiveIntegerField(default=0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='seed_runs',
                                          to='experiments.experimentrun')),
            ],
            options={
                'db_table': 'experiment_seed_runs',
                'ordering': ['seed'],
                'unique_together': {('run', 'seed')},
            },
        ),
    ]
