from .evaluate import EvaluateCommand
from .params import ParamsCommand
from .phantom import PhantomCommand
from .predict import PredictCommand
from .report import ReportCommand
from .train import TrainCommand

__all__ = [
    "EvaluateCommand",
    "ParamsCommand",
    "PhantomCommand",
    "PredictCommand",
    "ReportCommand",
    "TrainCommand",
]
