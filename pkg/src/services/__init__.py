"""Services package - losses, solvers, oracles, data generation, tuning and pipelines."""
