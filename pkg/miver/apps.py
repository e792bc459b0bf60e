from django.apps import AppConfig


class MiverConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'miver'
    verbose_name = 'MIVER pseudo-Boolean search'
