from django.apps import AppConfig


class NetlinkConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'netlink'
    verbose_name = 'Network Link'
