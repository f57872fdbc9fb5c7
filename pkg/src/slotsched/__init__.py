"""slotsched: a seedable meeting-scheduling simulator and its learners."""

from .calendar import Meeting, SlotGrid
from .environment import LoadBand, ParticipantProfile, SchedulingEnv
from .mapper import MapperConfig, MapperModel, train_mapper
from .policy import Experience, PolicyNet
from .trainer import ReplayBuffer, encode_state, run_episode

__version__ = "0.1.0"

__all__ = [
    "Meeting",
    "SlotGrid",
    "LoadBand",
    "ParticipantProfile",
    "SchedulingEnv",
    "MapperConfig",
    "MapperModel",
    "train_mapper",
    "Experience",
    "PolicyNet",
    "ReplayBuffer",
    "encode_state",
    "run_episode",
    "__version__",
]
