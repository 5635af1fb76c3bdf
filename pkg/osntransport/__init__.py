"""
Monte-Carlo simulator for the transport complexity of online social networks.
"""

default_app_config = 'osntransport.apps.OSNTransportConfig'
