import math
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.config import settings
from app.core.errors import InputError
from app.schemas.mechanism_file import NoiseSpec


def half_width(spec: NoiseSpec) -> float:
    """Distance W beyond which each untruncated tail holds tail_mass / 2."""
    if spec.kind == "laplace":
        return spec.scale * math.log(1.0 / spec.tail_mass)
    return spec.scale * float(stats.norm.isf(spec.tail_mass / 2))


class NoiseGrid:
    """Equal-width cells over the reals with the two end cells open to +-inf.

    ``log_masses(center)`` is the log probability of each cell for the noise
    distribution shifted to ``center``; tails beyond the grid fold into the
    end cells.
    """

    def __init__(self, spec: NoiseSpec, centers: Sequence[float]):
        spec = spec.resolved()
        step = spec.grid_step
        if step > spec.scale:
            raise InputError(
                f"Grid step {step:.6g} is too coarse to resolve noise scale {spec.scale:.6g}"
            )
        lowest, highest = float(min(centers)), float(max(centers))
        width = half_width(spec)
        if spec.bounds is not None:
            lo, hi = spec.bounds
            if lo > lowest - width or hi < highest + width:
                raise InputError(
                    f"Grid [{lo:.6g}, {hi:.6g}] does not cover [{lowest - width:.6g}, {highest + width:.6g}]"
                )
        else:
            # whole steps keep integer shifts of the center aligned with cell edges
            pad = math.ceil(width / step) * step
            lo, hi = lowest - pad, highest + pad
        cells = int(math.ceil((hi - lo) / step - 1e-9))
        if cells > settings.MAX_GRID_CELLS:
            raise InputError(f"Noise grid needs {cells} cells, above the limit {settings.MAX_GRID_CELLS}")

        self.spec = spec
        self.step = step
        self.width = width
        self.edges = lo + step * np.arange(cells + 1)
        self.centers = self.edges[:-1] + step / 2
        self.labels: Tuple[str, ...] = tuple(format_center(c) for c in self.centers)
        if len(set(self.labels)) != len(self.labels):
            raise InputError("Grid step is too fine for distinct transcript labels")

        self._dist = stats.laplace(scale=spec.scale) if spec.kind == "laplace" else stats.norm(scale=spec.scale)
        self.log_masses = lru_cache(maxsize=4096)(self._log_masses)

    def __len__(self) -> int:
        return len(self.centers)

    def _log_masses(self, center: float) -> np.ndarray:
        left = self.edges[:-1] - center
        right = self.edges[1:] - center
        left[0] = -np.inf
        right[-1] = np.inf

        dist = self._dist
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sf_left, sf_right = dist.logsf(left), dist.logsf(right)
            cdf_left, cdf_right = dist.logcdf(left), dist.logcdf(right)
            upper = sf_left + np.log1p(-np.exp(sf_right - sf_left))
            lower = cdf_right + np.log1p(-np.exp(cdf_left - cdf_right))
            middle = np.log1p(-(np.exp(cdf_left) + np.exp(sf_right)))
            out = np.where(left >= 0, upper, np.where(right <= 0, lower, middle))
        out = np.where(np.isnan(out), -np.inf, out)
        out.flags.writeable = False
        return out

    def masses(self, center: float) -> np.ndarray:
        return np.exp(self.log_masses(float(center)))

    def cell_of(self, value: float) -> int:
        k = int(np.searchsorted(self.edges, value, side="right")) - 1
        return min(max(k, 0), len(self.centers) - 1)


def format_center(value: float) -> str:
    text = f"{value:.10g}"
    return "0" if text == "-0" else text
