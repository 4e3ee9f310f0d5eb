from .metrics import AutonomyReport, InterventionRecord, compute_autonomy
from .episode import EpisodeEngine, RunLog, oracle_intervene, run_episode
from .replay import load_log, replay_hash, save_log, verify_log

__all__ = [
    "AutonomyReport",
    "EpisodeEngine",
    "InterventionRecord",
    "RunLog",
    "compute_autonomy",
    "load_log",
    "oracle_intervene",
    "replay_hash",
    "run_episode",
    "save_log",
    "verify_log",
]
