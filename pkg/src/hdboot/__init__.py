"""Bootstrap inference for maxima of high-dimensional sums.

The core objects are data matrices ``X`` (``n x p``), their scaled mean
``S_n = n^-1/2 sum_i X_i`` and bootstrap replicates of ``S_n``. On top of
these sit Gaussian reference laws, simultaneous confidence rectangles,
stepdown multiple testing, covariance comparison and a Lasso with bootstrap
penalty levels. :mod:`hdboot.simulab` runs Monte Carlo checks of all of them.
"""

from .bootstrap import (DEFAULT_B, BootstrapDraws, QuantileEstimate, Scheme, conditional_quantile, draws,
                        empirical_draws, gen_weights, multiplier_draws, studentized_draws)
from .core import (MAX, MAX_ABS, Rectangle, empirical_covariance, ks_distance, max_stat, scaled_mean,
                   studentize)
from .errors import (ConfigError, DegenerateCoordinateError, HDBootError, IndefiniteMatrixError,
                     InvalidDataError, NonConvergenceError, WrongSchemeError)
from .gaussian import (PSDFactor, RateInputs, anticoncentration_check, comparison_scale, equicorrelated,
                       gaussian_draws, nazarov_bound, psd_factor, rate_delta1, rate_delta2)
from .inference import (InfluencePanel, SimultaneousCI, StepdownResult, ate_influence, best_policy_set,
                        cov_compare_test, max_effect_lower, post_selection_ci, simultaneous_ci, stepdown)
from .lasso import (LassoFit, RegressionData, lasso_fit, penalty_heteroscedastic, penalty_homoscedastic,
                    rlasso_pipeline, soft_threshold, sup_score_test)

__version__ = "0.1.0"
