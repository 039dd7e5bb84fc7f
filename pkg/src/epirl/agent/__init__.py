from .estimator import EpiRLSelector
from .networks import ConvEncoder, IdentityEncoder, PolicyNetwork, ValueNetwork
from .optim import Adam
from .policy import (
    action_set_size,
    loss_entropy,
    loss_policy,
    loss_value,
    select_action_set,
)
from .training import (
    Agent,
    StepRecord,
    TrainConfig,
    apply_update,
    gradient_check,
    train,
    train_step,
)

__all__ = [
    "Adam", "Agent", "ConvEncoder", "EpiRLSelector", "IdentityEncoder",
    "PolicyNetwork", "StepRecord", "TrainConfig", "ValueNetwork",
    "action_set_size", "apply_update", "gradient_check", "loss_entropy",
    "loss_policy", "loss_value", "select_action_set", "train", "train_step",
]
