"""Export fitted scikit-learn random forests to the flintforest model format."""

from .export import ExportError, ExportRequest, export, export_to_dict, load_estimator
from .fidelity import CastDivergence, FidelityReport, check_fidelity

__version__ = "0.1.0"
