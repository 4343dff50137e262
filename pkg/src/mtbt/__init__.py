"""Multi-task boosted trees for tasks that share a prefix of overlap features."""

from .config import Hyperparams
from .dataset import MultiTaskDataset, TaskData, TaskSpec, load_dataset, save_dataset
from .trainer import GbtModel, MtbtModel, train_full, train_gbt_baseline, train_ibt_baseline, train_method

__all__ = [
    "Hyperparams",
    "MultiTaskDataset",
    "TaskData",
    "TaskSpec",
    "load_dataset",
    "save_dataset",
    "MtbtModel",
    "GbtModel",
    "train_full",
    "train_gbt_baseline",
    "train_ibt_baseline",
    "train_method",
]
