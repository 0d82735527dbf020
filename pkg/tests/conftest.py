import hypothesis

hypothesis.settings.register_profile(
    "suite",
    deadline=None,  # quadrature-backed checks are slow on first call
    max_examples=40,
    derandomize=True,
)
hypothesis.settings.load_profile("suite")
