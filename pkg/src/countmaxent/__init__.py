"""Maximum-entropy models of binary transaction data under count statistics.

The model matches the column margins of a dataset together with the
histogram of one transaction-level statistic (row margins, lazarus counts
or the joint first/last bounds) and is used to estimate itemset
frequencies.
"""

from .dataset import Dataset, SplitPair, column_margins, generate_synthetic, load_fimi, save_fimi, split
from .evaluation import BicReport, ItemsetScore, bic, dataset_log_likelihood, mine_closed_frequent, rank, score_itemsets
from .indep_dp import (
    bounds_joint_dist,
    brute_force_dist,
    compute_prob,
    conditional_dist,
    lazarus_dist,
    row_margin_dist,
    row_margin_remove,
)
from .maxent import (
    Constraints,
    FitConfig,
    InfeasibleBucket,
    MaxEntModel,
    NotConverged,
    deserialize,
    fit,
    fit_dataset,
    model_bucket_probs,
    query_itemset,
    serialize,
    transaction_prob,
)
from .statistics import Statistic, empirical_histogram

__version__ = "0.1.0"
