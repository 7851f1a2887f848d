from .params import IndistParams
from .report import DpReport, PointwiseReport, SemanticReport
