from hypothesis import HealthCheck, settings

settings.register_profile(
    "perclab",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("perclab")
