"""ssdlab: a desk-scale laboratory for intertemporal social dilemmas.

Gridworld Markov games (cleanup, harvest, and two-room button games), an
inequity-averse subjective-reward transform with temporally smoothed reward
traces, independent actor-critic learners, and a game-theoretic analysis
suite (Schelling diagrams, dilemma classification, social outcome metrics).
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config, parse_config
from .engine import Action, Cell, EngineConfig, GridState, load_map, state_digest
from .envs import (ButtonConfig, CleanupConfig, HarvestConfig, load_bundled_map,
                   make_env)
from .errors import (ConfigError, EpisodeDoneError, MapError, ReplayError,
                     SsdlabError, StatisticsError)
from .inequity import IAParams, InequityPipeline, fs_utility, subjective_rewards
from .learner import LearnerConfig, build_nets, evaluate, train

__all__ = [
    "Action", "ButtonConfig", "Cell", "CleanupConfig", "ConfigError",
    "EngineConfig", "EpisodeDoneError", "ExperimentConfig", "GridState",
    "HarvestConfig", "IAParams", "InequityPipeline", "LearnerConfig",
    "MapError", "ReplayError", "SsdlabError", "StatisticsError",
    "__version__", "build_nets", "evaluate", "fs_utility", "load_bundled_map",
    "load_config", "load_map", "make_env", "parse_config", "state_digest",
    "subjective_rewards", "train",
]
