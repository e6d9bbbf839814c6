from django.apps import AppConfig


class MapLearningConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.map_learning"
