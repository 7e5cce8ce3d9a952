"""
Root exception type for the toolkit.
Every module defines its own named errors as subclasses so the CLI can map
configuration problems and runtime failures to distinct exit codes.
"""


class PipelineError(Exception):
    """Base class for every error raised by the toolkit"""


class ConfigError(PipelineError):
    """Run configuration failed validation"""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
