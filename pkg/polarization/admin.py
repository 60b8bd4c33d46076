from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('run_id', 'command', 'seed', 'created_at')
    list_filter = ('command',)
    search_fields = ('run_id',)
    readonly_fields = ('created_at',)
