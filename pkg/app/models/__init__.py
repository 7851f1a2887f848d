from .database import Database, DatabaseSpace
from .distribution import Distribution
from .mechanism import Mechanism
from .prior import BeliefPrior
