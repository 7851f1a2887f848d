import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.schemas.params import IndistParams


class ReportModel(BaseModel):
    # epsilon_max may be +infinity; emit it as the JSON constant Infinity
    model_config = ConfigDict(ser_json_inf_nan="constants")


class PointwiseReport(ReportModel):
    bad_mass_x: float
    bad_mass_y: float
    bad_outcomes: List[str]
    epsilon: float
    delta: float

    @property
    def passed(self) -> bool:
        return max(self.bad_mass_x, self.bad_mass_y) <= self.delta


class DeltaPoint(ReportModel):
    epsilon: float
    delta: float
    worst_x: Optional[str] = None
    worst_y: Optional[str] = None


class DpReport(ReportModel):
    epsilon_max: float
    worst_pair: Optional[Tuple[str, str]] = None
    delta_at: List[DeltaPoint]
    pointwise: Optional[PointwiseReport] = None
    pairs_examined: int = 0
    epsilon_for_delta: Optional[Dict[str, float]] = None


class PairExtraction(ReportModel):
    x: str
    y: str
    semantic_epsilon: float
    exceeding_mass: float
    premise_holds: bool
    set_passes: bool
    pointwise_passes: bool
    exact_bound_passes: bool


class ExtractionReport(ReportModel):
    """Outcome of recovering DP parameters from two-point semantic privacy."""

    epsilon_bar: float
    delta: float
    params: IndistParams
    exact_ratio_bound: float
    pairs: List[PairExtraction]

    @property
    def passed(self) -> bool:
        return all(pair.set_passes and pair.pointwise_passes for pair in self.pairs if pair.premise_holds)

    @property
    def worst_margin(self) -> float:
        margins = [self.params.delta - pair.exceeding_mass for pair in self.pairs if pair.premise_holds]
        return min(margins) if margins else math.inf


class SemanticReport(ReportModel):
    """Per-transcript semantic losses of one mechanism under one prior.

    ``game_losses[i - 1][k]`` is the statistical difference between the
    Game 0 and Game i posteriors at transcript k, or None when the Game i
    posterior is undefined there.
    """

    weighting: Literal["prior", "real_db"] = "prior"
    real_db: Optional[str] = None
    transcripts: List[str]
    per_transcript_loss: List[Optional[float]]
    worst_game: List[Optional[int]]
    game_losses: List[List[Optional[float]]]
    transcript_prob_game0: List[float]
    transcript_prob_real_db: Optional[List[float]] = None
    undefined_games: Dict[str, List[int]] = {}
    epsilon_star: float
    bound_margins: Dict[str, float] = {}

    def weights(self) -> np.ndarray:
        if self.weighting == "real_db":
            return np.asarray(self.transcript_prob_real_db, dtype=float)
        return np.asarray(self.transcript_prob_game0, dtype=float)

    def exceeding(self, epsilon: float) -> np.ndarray:
        """Mask of transcripts whose loss exceeds epsilon.

        A transcript impossible under Game 0 has no loss and counts as exceeding.
        """
        mask = np.zeros(len(self.transcripts), dtype=bool)
        for k, loss in enumerate(self.per_transcript_loss):
            mask[k] = loss is None or loss > epsilon
        return mask

    def mass_exceeding(self, epsilon: float) -> float:
        weights = self.weights()
        return math.fsum(weights[self.exceeding(epsilon)].tolist())


class MarginReport(ReportModel):
    name: str
    applicable: bool = True
    passed: bool
    observed: float
    bound: float
    detail: str = ""

    @property
    def margin(self) -> float:
        return self.bound - self.observed


class TouchedPair(ReportModel):
    x: str
    y: str
    tight_delta: float
    passes: bool


class CounterexampleReport(ReportModel):
    n: int
    epsilon: float
    delta: float
    log_base: float
    sigma: float
    grid_step: float
    real_db: str
    prior_support: List[str]
    touched_pairs: List[TouchedPair]
    transcripts: List[str]
    centers: List[float]
    transcript_prob_real_db: List[float]
    ratio: List[float]
    ratio_model: List[float]
    ratio_printed: List[float]
    posterior_x0: List[float]
    sd_game1: List[float]
    threshold: float
    mass_sd_at_least: float
    game1_max_deviation: float
    max_sd: float

    @property
    def touched_pairs_pass(self) -> bool:
        return all(pair.passes for pair in self.touched_pairs)


class LawResult(ReportModel):
    name: str
    passed: bool
    worst_margin: float
    trials: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name} worst_margin={self.worst_margin:.6e} trials={self.trials}"
        return f"{text} {self.detail}" if self.detail else text


class SuiteReport(ReportModel):
    suite: str
    seed: int
    trials: int
    results: List[LawResult]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)
