from .boost import AdaBoostModel, DegenerateDataError, fit_adaboost
from .design import CONTROLS, INDICATORS, DesignMatrix, assemble, default_features
from .evaluate import (EvalReport, cohen_kappa, evaluate_loocv, evaluate_scores,
                       likelihood_ratio_period_test, roc_curve)
from .logistic import fit_logistic
from .pls import PlsLogitModel, fit_pls_logit

__all__ = [
    "AdaBoostModel", "DegenerateDataError", "fit_adaboost", "CONTROLS", "INDICATORS",
    "DesignMatrix", "assemble", "default_features", "EvalReport", "cohen_kappa", "evaluate_loocv",
    "evaluate_scores", "likelihood_ratio_period_test", "roc_curve", "fit_logistic",
    "PlsLogitModel", "fit_pls_logit",
]
