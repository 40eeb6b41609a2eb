"""Dataset loaders, metrics, the experiment runner, and report output."""

from .datasets import Example, load_infotabs, load_strategyqa, load_tempquestions
from .metrics import accuracy, exact_match
from .runner import RunMode, RunReport, run_experiment

__all__ = [
    "Example",
    "load_infotabs",
    "load_strategyqa",
    "load_tempquestions",
    "accuracy",
    "exact_match",
    "RunMode",
    "RunReport",
    "run_experiment",
]
