from django.apps import AppConfig


class ScarConfig(AppConfig):
    name = "scar"
    verbose_name = "SCAR replenishment scheduling"
