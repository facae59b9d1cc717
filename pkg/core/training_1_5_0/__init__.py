"""Training loop, model selection and ablation sweeps (1.5.0)."""
