"""Random search, TPE and Hyperband tuners with scalarized fairness objectives."""
from .records import AlphaPolicy, TrialFailed, TrialRecord, TunerError
from .schedule import Bracket, BracketSchedule, Rung, bracket_schedule, rung_fraction
from .search import run_fairband, run_random_search, run_tpe
from .selection import Selection, select_model, selection_alpha
from .tpe import tpe_suggest

__all__ = [
    "AlphaPolicy",
    "Bracket",
    "BracketSchedule",
    "Rung",
    "Selection",
    "TrialFailed",
    "TrialRecord",
    "TunerError",
    "bracket_schedule",
    "rung_fraction",
    "run_fairband",
    "run_random_search",
    "run_tpe",
    "select_model",
    "selection_alpha",
    "tpe_suggest",
]
