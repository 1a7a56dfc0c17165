"""Impression forecasting: Kalman slot beliefs, a 1-NN baseline and demographic similarity."""

from .kalman import (
    GaussianBelief,
    KalmanModel,
    SigmaEstimate,
    SlotEvaluation,
    SlotKey,
    estimate_observation_sigma,
    evaluate_slot,
    fit_model,
    init_prior,
    kalman_forecast,
    kalman_update,
)
from .knn import Knn1Model, knn1_predict, knn1_train
from .metrics import rms_relative_error, rrse
from .similarity import (
    DemographicProfile,
    NewProgramPrediction,
    PairCondition,
    demographic_profile,
    distance_score,
    pairing_experiment,
    predict_new_program,
    profile_from_counts,
    similarity_dot,
)

__all__ = [
    "GaussianBelief", "KalmanModel", "SigmaEstimate", "SlotEvaluation", "SlotKey",
    "estimate_observation_sigma", "evaluate_slot", "fit_model", "init_prior", "kalman_forecast",
    "kalman_update", "Knn1Model", "knn1_predict", "knn1_train", "rms_relative_error", "rrse",
    "DemographicProfile", "NewProgramPrediction", "PairCondition", "demographic_profile",
    "distance_score", "pairing_experiment", "predict_new_program", "profile_from_counts",
    "similarity_dot",
]
