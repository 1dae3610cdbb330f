"""Constrained launcher for generated analysis scripts.

Runs one script in the current working directory with wall-clock and memory
limits, best-effort network containment, and manifest validation.  The whole
interface is the exit code:

    0    script exited 0 and manifest.json validates
    3    script exited 0 but the manifest contract is violated
    124  wall-clock limit exceeded
    137  memory limit exceeded
    else the script's own nonzero exit code

This is plumbing, not a security boundary: containment is cooperative
(stripped proxy variables, a socket refusal patch) and does not resist
deliberately malicious code.
"""

from .core import EXIT_MANIFEST_VIOLATION, EXIT_MEMORY, EXIT_TIMEOUT, ShimConfig, shim_main, validate_manifest

__all__ = [
    "EXIT_MANIFEST_VIOLATION",
    "EXIT_MEMORY",
    "EXIT_TIMEOUT",
    "ShimConfig",
    "shim_main",
    "validate_manifest",
]

__version__ = "0.1.0"
