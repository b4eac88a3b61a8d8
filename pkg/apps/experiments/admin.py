from django.contrib import admin

from .models import ExperimentRun, SeedRun


class SeedRunInline(admin.TabularInline):
    model = SeedRun
    extra = 0
    fields = ['seed', 'rounds', 'trace_path', 'trace_sha256', 'max_bits']
    readonly_fields = fields


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['name', 'status', 'config_hash', 'version', 'created_at', 'finished_at']
    list_filter = ['status', 'version']
    search_fields = ['name', 'config_hash', 'output_dir']
    readonly_fields = ['config', 'config_hash', 'summary', 'verification', 'error']
    inlines = [SeedRunInline]


@admin.register(SeedRun)
class SeedRunAdmin(admin.ModelAdmin):
    list_display = ['run', 'seed', 'rounds', 'max_bits', 'trace_sha256']
    search_fields = ['run__name', 'trace_sha256']
