"""Exception types shared across the package."""


class SsdlabError(Exception):
    """Base class for all package errors."""


class ConfigError(SsdlabError):
    """Invalid configuration value, environment id, or action set."""


class MapError(ConfigError):
    """ASCII map failed to parse; message names the offending line/column."""


class EpisodeDoneError(SsdlabError):
    """step() called on a finished episode before reset()."""


class ReplayError(SsdlabError):
    """Replay log unreadable, wrong version, or diverged from re-simulation."""


class StatisticsError(SsdlabError):
    """Not enough samples to compute the requested statistic."""
