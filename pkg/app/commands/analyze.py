import click

from app.commands import build_config
from app.schemas.params import IndistParams
from app.services import dp_analysis
from app.services.mechanism_io import dp_curve_frame, load_mechanism, load_pairs, write_csv, write_json


@click.command("analyze")
@click.option("--mechanism", "mechanism_path", required=True, help="Mechanism JSON file.")
@click.option("--epsilons", default="0", show_default=True, help="Comma-separated epsilons for the delta curve.")
@click.option("--epsilon", type=float, help="Epsilon of the point-wise check on the worst pair.")
@click.option("--delta", type=float, default=0.0, show_default=True, help="Delta of the point-wise check.")
@click.option("--pairs", "pairs_path", help="JSON list of neighbor pairs; required beyond the enumeration cap.")
@click.option("--solve-delta", type=float, help="Also report the smallest epsilon whose tight delta is this.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--output", help="Output path (stdout when omitted).")
def command(mechanism_path, epsilons, epsilon, delta, pairs_path, solve_delta, fmt, output):
    """Exact epsilon_max and tight delta(epsilon) over neighbor pairs."""
    config = build_config(command="analyze", mechanism=mechanism_path, epsilons=epsilons, epsilon=epsilon,
                          delta=delta, pairs=pairs_path, format=fmt, output=output)
    m = load_mechanism(config.mechanism)
    pairs = load_pairs(config.pairs, m.space) if config.pairs else None
    params = IndistParams(epsilon=config.epsilon, delta=config.delta) if config.epsilon is not None else None

    report = dp_analysis.tight_delta_curve(m, config.epsilons, pairs=pairs, params=params)
    if solve_delta is not None:
        report.epsilon_for_delta = {
            "delta": solve_delta,
            "epsilon": dp_analysis.epsilon_for_delta(m, solve_delta, pairs=pairs),
        }

    if config.format == "csv":
        write_csv(dp_curve_frame(report), config.output)
    else:
        write_json(report, config.output)
