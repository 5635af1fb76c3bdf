from django.apps import AppConfig


class OSNTransportConfig(AppConfig):
    label = 'osntransport'
    name = 'osntransport'
    verbose_name = "OSN transport complexity"
