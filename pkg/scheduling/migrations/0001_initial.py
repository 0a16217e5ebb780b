# Generated by Django 4.2.27 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('subcommand', models.CharField(choices=[('run', 'Run'), ('gen', 'Generate'), ('compare', 'Compare'), ('lowerbound', 'Lower bound'), ('certify', 'Certify')], max_length=20)),
                ('config', models.JSONField()),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('output_digest', models.CharField(blank=True, max_length=64)),
                ('status', models.CharField(choices=[('OK', 'OK'), ('VIOLATION', 'Invariant violation'), ('ERROR', 'Error')], default='OK', max_length=10)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.AddIndex(
            model_name='runrecord',
            index=models.Index(fields=['subcommand', 'status'], name='scheduling_subcmd_status_idx'),
        ),
    ]
