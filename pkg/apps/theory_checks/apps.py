from django.apps import AppConfig


class TheoryChecksConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.theory_checks"
