import json

from django.contrib import admin
from django.http import HttpResponse
from django.utils import timezone

from .models import AuditSettings, ReportRow, VerificationRun


# ============================================================
# Verification runs
# ============================================================

class ReportRowInline(admin.TabularInline):
    model = ReportRow
    extra = 0
    can_delete = False
    fields = ('index', 'case', 'estimate', 'std_error', 'reference', 'margin', 'passed', 'error')
    readonly_fields = fields
    ordering = ('index',)

    def has_add_permission(self, request, obj=None):
        return False


class PassedFilter(admin.SimpleListFilter):
    title = 'Outcome'
    parameter_name = 'outcome'

    def lookups(self, request, model_admin):
        return (
            ('passed', 'All rows passed'),
            ('failed', 'Some rows failed'),
            ('drift', 'Drifted on replay'),
        )

    def queryset(self, request, queryset):
        if self.value() == 'passed':
            return queryset.filter(passed=True)
        if self.value() == 'failed':
            return queryset.filter(passed=False)
        if self.value() == 'drift':
            return queryset.filter(last_drift_count__gt=0)
        return queryset


@admin.register(VerificationRun)
class VerificationRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'command', 'seed', 'passed', 'row_count', 'failed_count',
                    'wall_clock_seconds', 'last_drift_count', 'created_at')
    list_filter = ('command', PassedFilter)
    search_fields = ('command', 'seed', 'output_path')
    readonly_fields = ('command', 'seed', 'config', 'header', 'library_version', 'wall_clock_seconds',
                       'passed', 'row_count', 'failed_count', 'output_path', 'last_replayed_at',
                       'last_drift_count', 'created_at')
    inlines = [ReportRowInline]
    actions = ['replay_from_header', 'export_report_json']

    @admin.action(description='🔁 Replay from header (bitwise check)')
    def replay_from_header(self, request, queryset):
        from .services import VerificationEngine
        for run in queryset:
            try:
                result = VerificationEngine.replay_header(run.header, run.report_rows())
                run.last_replayed_at = timezone.now()
                run.last_drift_count = len(result['drift'])
                run.save(update_fields=['last_replayed_at', 'last_drift_count'])
                if result['status'] == 'success':
                    self.message_user(request, f"✅ Run {run.pk} ({run.command}) replayed bit for bit.")
                else:
                    self.message_user(
                        request,
                        f"⚠️ Run {run.pk} ({run.command}) drifted in {len(result['drift'])} cells.",
                        level='warning'
                    )
            except Exception as e:
                self.message_user(request, f"❌ Error replaying run {run.pk}: {str(e)}", level='error')

    @admin.action(description='📄 Export report (JSON)')
    def export_report_json(self, request, queryset):
        payload = []
        for run in queryset:
            rows = []
            for row in run.report_rows():
                rows.append({key: (None if isinstance(value, float) and value != value else value)
                             for key, value in row.items()})
            payload.append({'header': run.header, 'rows': rows})
        body = payload[0] if len(payload) == 1 else payload
        response = HttpResponse(json.dumps(body, indent=2), content_type='application/json')
        name = f"projave-run-{queryset.first().pk}.json" if len(payload) == 1 else 'projave-runs.json'
        response['Content-Disposition'] = f'attachment; filename="{name}"'
        return response


@admin.register(ReportRow)
class ReportRowAdmin(admin.ModelAdmin):
    list_display = ('run', 'index', 'command', 'case', 'estimate', 'reference', 'margin', 'passed')
    list_filter = ('passed', 'command', 'case')
    search_fields = ('case', 'inputs', 'error')


@admin.register(AuditSettings)
class AuditSettingsAdmin(admin.ModelAdmin):
    list_display = ('audit_enabled', 'runs_per_audit', 'last_audit', 'last_audit_count', 'last_drift_count')
    list_editable = ('audit_enabled', 'runs_per_audit')
    list_display_links = None  # Allow editing all fields including first one
