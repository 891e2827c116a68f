"""Experiment harness: data generation, sweeps, image runs, metrics and I/O."""
