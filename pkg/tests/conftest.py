from hypothesis import settings

# numerical property tests have uneven run times; disable the per-example deadline
settings.register_profile("numerics", deadline=None)
settings.load_profile("numerics")
