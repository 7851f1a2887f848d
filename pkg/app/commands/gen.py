import click

from app.commands import build_config, parse_log_base
from app.core.config import settings
from app.core.errors import InputError
from app.models.database import DatabaseSpace
from app.schemas.mechanism_file import QUERY_NAMES, NoiseSpec
from app.services import mechanism_model
from app.services.mechanism_io import save_mechanism
from app.utils.helpers import parse_symbol

GENERATORS = ("randomized_response", "leaky_randomized_response", "laplace_sum", "gaussian_sum", "ls_laplace")


def _require(value, flag: str, kind: str):
    if value is None:
        raise InputError(f"{kind} needs {flag}")
    return value


@click.command("gen")
@click.option("--type", "kind", type=click.Choice(GENERATORS), required=True)
@click.option("--n", type=int, required=True, help="Database length.")
@click.option("--domain", default="0,1", show_default=True, help="Comma-separated domain symbols.")
@click.option("--default", "default_symbol", help="Default symbol (first domain symbol when omitted).")
@click.option("--flip-prob", type=float)
@click.option("--leak-prob", type=float)
@click.option("--scale", type=float, help="Noise scale (lambda or sigma).")
@click.option("--epsilon", type=float)
@click.option("--delta", type=float)
@click.option("--log-base", default="e", show_default=True)
@click.option("--sensitivity", type=float, help="Local sensitivity bound s for ls_laplace.")
@click.option("--query", type=click.Choice(QUERY_NAMES), default="median", show_default=True)
@click.option("--grid-step", type=float)
@click.option("--tail-mass", type=float)
@click.option("--representation", type=click.Choice(["auto", "dense", "generator"]), default="auto",
              show_default=True)
@click.option("--output", help="Mechanism file path (stdout when omitted).")
def command(kind, n, domain, default_symbol, flip_prob, leak_prob, scale, epsilon, delta, log_base,
            sensitivity, query, grid_step, tail_mass, representation, output):
    """Write a generated mechanism file."""
    config = build_config(command="gen", n=n, epsilon=epsilon, delta=delta, output=output)
    symbols = [parse_symbol(symbol) for symbol in domain.split(",") if symbol.strip()]
    default = parse_symbol(default_symbol) if default_symbol is not None else None
    space = DatabaseSpace(symbols, config.n, default)

    if kind == "randomized_response":
        m = mechanism_model.make_randomized_response(space, _require(flip_prob, "--flip-prob", kind))
    elif kind == "leaky_randomized_response":
        m = mechanism_model.make_leaky_randomized_response(
            space, _require(flip_prob, "--flip-prob", kind), _require(leak_prob, "--leak-prob", kind))
    elif kind == "laplace_sum":
        if scale is None:
            scale = 1.0 / _require(config.epsilon, "--scale or --epsilon", kind)
        m = mechanism_model.make_laplace_sum(space, scale, grid_step=grid_step, tail_mass=tail_mass)
    elif kind == "gaussian_sum":
        m = mechanism_model.make_gaussian_sum(
            space, _require(config.epsilon, "--epsilon", kind), _require(config.delta, "--delta", kind),
            log_base=parse_log_base(log_base), grid_step=grid_step, tail_mass=tail_mass)
    else:
        s = _require(sensitivity, "--sensitivity", kind)
        eps = _require(config.epsilon, "--epsilon", kind)
        if not eps > 0:
            raise InputError("ls_laplace needs --epsilon > 0")
        noise = NoiseSpec(kind="laplace", scale=s / eps, grid_step=grid_step,
                          tail_mass=settings.TAIL_MASS if tail_mass is None else tail_mass)
        f = mechanism_model.named_query(space, query)
        m = mechanism_model.make_local_sensitivity_laplace(f, space, s, eps, noise_grid=noise, query=query)

    save_mechanism(m, config.output, representation=representation)
