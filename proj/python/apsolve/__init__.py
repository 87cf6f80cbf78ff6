"""Asymptotic-preserving and limit solvers for the Hopf-Cole selection-mutation model."""

from ._apsolve import (
    ConfigError,
    DomainError,
    ModelError,
    SolverFailure,
    StabilityError,
    commands,
    config_digest,
    constants,
    presets,
    run_command,
    run_eps,
    run_limit,
    solve_I,
    solve_J,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "ModelError",
    "SolverFailure",
    "StabilityError",
    "commands",
    "config_digest",
    "constants",
    "presets",
    "run_command",
    "run_eps",
    "run_limit",
    "solve_I",
    "solve_J",
]
