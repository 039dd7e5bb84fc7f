import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from ..data import GenotypeMatrix
from .training import TrainConfig, train


class EpiRLSelector(SelectorMixin, BaseEstimator):
    """Select an interacting SNP set with the policy-gradient agent.

    Constructor arguments mirror :class:`~epirl.agent.TrainConfig`, so the
    selector works with ``clone``, ``get_params`` and grid searches. After
    ``fit`` the best set seen during training (by MDR reward on the full
    data) defines the support mask.

    Attributes
    ----------
    report_ : TrialReport
    best_set_ : tuple of int
    best_reward_ : RewardValue
    agent_ : Agent
        The trained policy/value networks.
    """

    def __init__(self, batch_size=32, n_max=4, entropy_weight=0.01,
                 learning_rate=1e-3, max_iterations=5000, seed=0,
                 encoder="identity", encoding="raw_codes", hidden_size=64,
                 conv_width=5, conv_channels=8, init_scale=0.1, beta1=0.9,
                 beta2=0.999, epsilon=1e-8, resample_batch=True, top_k=10):
        self.batch_size = batch_size
        self.n_max = n_max
        self.entropy_weight = entropy_weight
        self.learning_rate = learning_rate
        self.max_iterations = max_iterations
        self.seed = seed
        self.encoder = encoder
        self.encoding = encoding
        self.hidden_size = hidden_size
        self.conv_width = conv_width
        self.conv_channels = conv_channels
        self.init_scale = init_scale
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.resample_batch = resample_batch
        self.top_k = top_k

    def fit(self, X, y, ground_truth=None):
        """Train on genotypes ``X`` (0/1/2) and labels ``y`` (0 control, 1 case).

        ``ground_truth`` enables early stopping on the first exact hit.
        """
        data = GenotypeMatrix.from_arrays(X, y)
        cfg = TrainConfig(**self.get_params())
        self.n_features_in_ = data.n_snps
        self.report_ = train(data, cfg, ground_truth=ground_truth)
        self.agent_ = self.report_.agent
        self.best_set_, self.best_reward_ = self.report_.best_sets[0]
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "best_set_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(self.best_set_)] = True
        return mask
