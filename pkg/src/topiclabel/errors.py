"""Exception types raised across the package."""


class TopicLabelError(Exception):
    """Base class for all package errors."""


class ParseError(TopicLabelError):
    def __init__(self, path, line_number, message):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{self.path}:{line_number}: {message}")


class DimensionError(TopicLabelError):
    pass


class LinkError(TopicLabelError):
    pass


class ValidationError(TopicLabelError):
    pass


class PoolExhaustedError(TopicLabelError):
    pass


class LeakageError(TopicLabelError):
    pass


class ConfigError(TopicLabelError):
    pass
