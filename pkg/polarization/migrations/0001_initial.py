# Generated by Django 4.2.16 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('run_id', models.CharField(max_length=64, primary_key=True, serialize=False)),
                ('command', models.CharField(db_index=True, max_length=32)),
                ('seed', models.BigIntegerField(db_index=True)),
                ('config', models.JSONField()),
                ('manifest', models.JSONField()),
                ('result_summary', models.JSONField(default=dict)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-created_at'],
            },
        ),
    ]
