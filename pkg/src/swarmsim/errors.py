"""Exception types shared across the engine."""


class ConfigError(ValueError):
    """Invalid configuration value or file."""


class SimulationFault(RuntimeError):
    """Non-finite state encountered during integration.

    ``agent_index`` identifies the offending vehicle when known.
    """

    def __init__(self, message, agent_index=None):
        super().__init__(message)
        self.agent_index = agent_index


class DegenerateContact(ValueError):
    """Collision normal undefined (coincident positions)."""


class DumpFormatError(ValueError):
    """Malformed trajectory dump. ``byte_offset`` locates the fault."""

    def __init__(self, message, byte_offset=None):
        super().__init__(message)
        self.byte_offset = byte_offset


class ReplayDivergence(RuntimeError):
    """Replay of a recorded trajectory did not reproduce the dump."""
