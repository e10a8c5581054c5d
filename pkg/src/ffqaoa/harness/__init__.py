"""Configuration, orchestration and result files for experiments."""
