"""Mechanism and prior files, report writers."""
import json
import math
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import click
import numpy as np
import pandas as pd
from pydantic import BaseModel, TypeAdapter, ValidationError

from app.core.config import settings
from app.core.errors import InputError
from app.core.logging import logger
from app.models.database import Database, DatabaseSpace
from app.models.mechanism import Mechanism
from app.models.prior import BeliefPrior
from app.schemas.mechanism_file import MechanismFile, PriorEntry
from app.schemas.report import CounterexampleReport, DpReport, SemanticReport
from app.services import mechanism_model
from app.utils.helpers import format_decimal, parse_decimal, parse_symbol

PRIOR_ADAPTER = TypeAdapter(List[PriorEntry])
PAIR_ADAPTER = TypeAdapter(List[Tuple[str, str]])


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"Cannot read {what} file {path}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what.capitalize()} file {path} is not valid JSON: line {exc.lineno} "
                         f"column {exc.colno}: {exc.msg}")


def validation_detail(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}" for error in exc.errors()
    )


def space_from_file(spec: MechanismFile) -> DatabaseSpace:
    domain = [parse_symbol(symbol) for symbol in spec.domain]
    default = parse_symbol(spec.default) if spec.default is not None else None
    return DatabaseSpace(domain, spec.n, default)


def mechanism_from_file(spec: MechanismFile) -> Mechanism:
    space = space_from_file(spec)
    if spec.generator is not None:
        m = mechanism_model.build_from_spec(space, spec.generator)
        if list(map(str, m.transcripts)) != spec.transcripts:
            raise InputError("Listed transcripts do not match the generator's transcripts")
        return m
    table = {}
    for key, probs in spec.matrix.items():
        x = space.decode(key)
        if x in table:
            raise InputError(f"Matrix lists database {key!r} twice")
        table[x] = [parse_decimal(p) for p in probs]
    return Mechanism.from_table(space, spec.transcripts, table, name="table")


def load_mechanism(path: str) -> Mechanism:
    data = _read_json(path, "mechanism")
    try:
        spec = MechanismFile.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"Mechanism file {path}: {validation_detail(exc)}")
    m = mechanism_from_file(spec)
    logger.info("Loaded %r from %s", m, path)
    return m


def mechanism_to_file(m: Mechanism, representation: str = "auto") -> MechanismFile:
    """Serialize as a dense matrix or a generator descriptor.

    ``auto`` writes a matrix when the table fits settings.DENSE_WRITE_CAP.
    Spaces beyond the enumeration cap are never densified.
    """
    space = m.space
    cells = space.count * len(m.transcripts) if space.enumerable else math.inf
    if representation == "auto":
        dense = cells <= settings.DENSE_WRITE_CAP or m.descriptor is None
    elif representation in ("dense", "generator"):
        dense = representation == "dense"
    else:
        raise InputError(f"Unknown representation {representation!r}")
    if dense and cells > settings.DENSE_WRITE_CAP:
        raise InputError(f"Mechanism has {cells} table cells; too large to write densely")
    if not dense and m.descriptor is None:
        raise InputError("Mechanism has no generator descriptor; write it densely")

    matrix = None
    if dense:
        matrix = {space.encode(x): [format_decimal(p) for p in m.row_array(x).tolist()]
                  for x in space.databases()}
    return MechanismFile(
        domain=[str(symbol) for symbol in space.domain],
        n=space.n,
        default=str(space.default_symbol),
        transcripts=[str(t) for t in m.transcripts],
        matrix=matrix,
        generator=None if dense else m.descriptor,
    )


def save_mechanism(m: Mechanism, path: Optional[str], representation: str = "auto"):
    spec = mechanism_to_file(m, representation)
    write_text(spec.model_dump_json(indent=2, exclude_none=True) + "\n", path)
    logger.info("Wrote %s mechanism file to %s", "dense" if spec.matrix is not None else "generator",
                path or "stdout")


def load_prior(path: str, space: DatabaseSpace) -> BeliefPrior:
    data = _read_json(path, "prior")
    try:
        entries = PRIOR_ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise InputError(f"Prior file {path}: {validation_detail(exc)}")
    support = [space.decode(entry.database) for entry in entries]
    weights = [parse_decimal(entry.weight) for entry in entries]
    try:
        return BeliefPrior(space, support, weights)
    except InputError as exc:
        raise InputError(f"Prior file {path}: {exc.detail}")


def save_prior(prior: BeliefPrior, path: Optional[str]):
    entries = [PriorEntry(database=prior.space.encode(x), weight=format_decimal(w))
               for x, w in zip(prior.support, prior.probs.tolist())]
    write_text(json.dumps([entry.model_dump() for entry in entries], indent=2) + "\n", path)


def load_pairs(path: str, space: DatabaseSpace) -> List[Tuple[Database, Database]]:
    data = _read_json(path, "pairs")
    try:
        pairs = PAIR_ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise InputError(f"Pairs file {path}: {validation_detail(exc)}")
    return [(space.decode(x), space.decode(y)) for x, y in pairs]


def write_text(text: str, path: Optional[str]):
    if path is None or path == "-":
        click.echo(text, nl=False)
        return
    target = Path(path)
    if target.parent and not target.parent.exists():
        raise InputError(f"Output directory {target.parent} does not exist")
    target.write_text(text, encoding="utf-8")


def write_json(model: BaseModel, path: Optional[str], exclude: Iterable[str] = ()):
    write_text(model.model_dump_json(indent=2, exclude=set(exclude)) + "\n", path)


def write_csv(frame: pd.DataFrame, path: Optional[str]):
    write_text(frame.to_csv(index=False, float_format="%.17g"), path)


def dp_curve_frame(report: DpReport) -> pd.DataFrame:
    return pd.DataFrame(
        [(point.epsilon, point.delta, point.worst_x, point.worst_y) for point in report.delta_at],
        columns=["epsilon", "delta", "worst_x", "worst_y"],
    )


def semantic_trace_frame(report: SemanticReport) -> pd.DataFrame:
    """One row per (transcript, game) with a defined or undefined loss."""
    real = report.transcript_prob_real_db
    rows = []
    for i, losses in enumerate(report.game_losses, start=1):
        for k, label in enumerate(report.transcripts):
            rows.append((label, i, losses[k], report.transcript_prob_game0[k],
                         real[k] if real is not None else np.nan))
    return pd.DataFrame(rows, columns=["transcript", "game_index", "sd", "transcript_prob_game0",
                                       "transcript_prob_real_db"])


def counterexample_frame(report: CounterexampleReport) -> pd.DataFrame:
    return pd.DataFrame({
        "transcript": report.transcripts,
        "ratio": report.ratio,
        "posterior_x0": report.posterior_x0,
        "sd_game1": report.sd_game1,
    })
