"""Native learners: CART fault localizer and epsilon-SVR parameter estimator."""

from .persist import FormatError, model_load, model_save
from .svr import SvrModel, SvrNoConvergence, svr_fit, svr_predict
from .tree import DecisionTreeModel, DegenerateData, tree_fit, tree_predict

__all__ = [
    "DecisionTreeModel",
    "DegenerateData",
    "FormatError",
    "SvrModel",
    "SvrNoConvergence",
    "model_load",
    "model_save",
    "svr_fit",
    "svr_predict",
    "tree_fit",
    "tree_predict",
]
