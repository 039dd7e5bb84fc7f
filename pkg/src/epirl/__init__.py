"""Epistasis detection: MDR rewards, exhaustive k-locus scans and a
policy-gradient agent that searches for interacting SNP sets."""

from .agent import EpiRLSelector, TrainConfig, train
from .data import (
    GenotypeMatrix,
    Minibatch,
    PenetranceModel,
    encode_genotypes,
    load_dataset,
    sample_minibatch,
    simulate_dataset,
    write_dataset,
    xor_penetrance,
)
from .reward import MDRClassifier, RewardValue, reward
from .search import ExhaustiveSearch, combination_count, exhaustive_topk

__version__ = "0.1.0"

__all__ = [
    "EpiRLSelector", "ExhaustiveSearch", "GenotypeMatrix", "MDRClassifier",
    "Minibatch", "PenetranceModel", "RewardValue", "TrainConfig",
    "combination_count", "encode_genotypes", "exhaustive_topk", "load_dataset",
    "reward", "sample_minibatch", "simulate_dataset", "train", "write_dataset",
    "xor_penetrance",
]
