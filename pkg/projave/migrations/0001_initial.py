# Generated by Django 5.2.8 on 2026-10-19 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='AuditSettings',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('audit_enabled', models.BooleanField(default=True, help_text='Let the scheduled job replay recent runs')),
                ('runs_per_audit', models.IntegerField(default=5, help_text='How many recent runs each audit replays')),
                ('last_audit', models.DateTimeField(blank=True, help_text='Last time the audit ran', null=True)),
                ('last_audit_count', models.IntegerField(default=0, help_text='Runs replayed in the last audit')),
                ('last_drift_count', models.IntegerField(default=0, help_text='Runs that drifted in the last audit')),
            ],
            options={
                'verbose_name': 'Audit Settings',
                'verbose_name_plural': 'Audit Settings',
            },
        ),
        migrations.CreateModel(
            name='VerificationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(choices=[('constants', 'Constants'), ('verify-sobolev', 'Verify Sobolev'), ('chain', 'Chain'), ('petty', 'Petty'), ('geom-ineq', 'Geometric inequalities'), ('bv', 'BV'), ('validate-fixture', 'Validate fixture')], max_length=20)),
                ('seed', models.BigIntegerField()),
                ('config', models.JSONField(help_text='Self-contained run config; replaying it reproduces the rows')),
                ('header', models.JSONField(help_text='Report header as written to the report file')),
                ('library_version', models.CharField(max_length=20)),
                ('wall_clock_seconds', models.FloatField(default=0.0)),
                ('passed', models.BooleanField(default=False)),
                ('row_count', models.IntegerField(default=0)),
                ('failed_count', models.IntegerField(default=0)),
                ('output_path', models.CharField(blank=True, max_length=500)),
                ('last_replayed_at', models.DateTimeField(blank=True, null=True)),
                ('last_drift_count', models.IntegerField(blank=True, help_text='Cells that differed on the last replay', null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', 'created_at'], name='projave_run_cmd_created_idx')],
            },
        ),
        migrations.CreateModel(
            name='ReportRow',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('index', models.IntegerField()),
                ('command', models.CharField(max_length=20)),
                ('case', models.CharField(max_length=100)),
                ('inputs', models.TextField(help_text='Canonical JSON of the row inputs')),
                ('estimate', models.FloatField(blank=True, null=True)),
                ('std_error', models.FloatField(blank=True, null=True)),
                ('reference', models.FloatField(blank=True, null=True)),
                ('margin', models.FloatField(blank=True, null=True)),
                ('passed', models.BooleanField(default=False)),
                ('error', models.TextField(blank=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='rows', to='projave.verificationrun')),
            ],
            options={
                'ordering': ['run', 'index'],
                'unique_together': {('run', 'index')},
            },
        ),
    ]
