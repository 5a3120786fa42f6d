from django.apps import AppConfig


class PoromechanicsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'poromechanics'
    verbose_name = 'Poroelastic reference configuration'
