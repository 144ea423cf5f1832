from .core import (
    DecisionTreeModel,
    Metrics,
    MlpModel,
    MlpParams,
    Model,
    Objective,
    RandomForestModel,
    RfParams,
    evaluate,
    input_gradient,
    load_model,
    metrics,
    model_from_dict,
    objective_value,
    predict,
    predict_proba,
    save_model,
    train_decision_tree,
    train_mlp,
    train_model,
    train_random_forest,
)
from .nn import DenseNet
from .tree import DtParams, TreeStructure

__all__ = [
    "DecisionTreeModel", "DenseNet", "DtParams", "Metrics", "MlpModel", "MlpParams",
    "Model", "Objective", "RandomForestModel", "RfParams", "TreeStructure", "evaluate",
    "input_gradient", "load_model", "metrics", "model_from_dict", "objective_value",
    "predict", "predict_proba", "save_model", "train_decision_tree", "train_mlp",
    "train_model", "train_random_forest",
]
