import click

from app.commands import build_config
from app.schemas.params import IndistParams
from app.services import bayes_semantics
from app.services.mechanism_io import load_mechanism, load_prior, semantic_trace_frame, write_csv, write_json


@click.command("semantic")
@click.option("--mechanism", "mechanism_path", required=True, help="Mechanism JSON file.")
@click.option("--prior", "prior_path", required=True, help="Prior JSON file.")
@click.option("--real-db", help="Real database; switches to reality-oblivious weighting.")
@click.option("--epsilon", type=float, default=0.0, show_default=True,
              help="Loss threshold for the reported exceeding mass.")
@click.option("--dp-epsilon", type=float, help="Mechanism epsilon for the bound margins.")
@click.option("--dp-delta", type=float, default=0.0, show_default=True, help="Mechanism delta for the bound margins.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--output", help="Output path (stdout when omitted).")
def command(mechanism_path, prior_path, real_db, epsilon, dp_epsilon, dp_delta, fmt, output):
    """Posterior losses of Games 0..n under a prior."""
    config = build_config(command="semantic", mechanism=mechanism_path, prior=prior_path, real_db=real_db,
                          epsilon=epsilon, format=fmt, output=output)
    m = load_mechanism(config.mechanism)
    prior = load_prior(config.prior, m.space)
    real = m.space.decode(config.real_db) if config.real_db is not None else None

    report = bayes_semantics.semantic_report(m, prior, real_db=real)
    if dp_epsilon is not None:
        bayes_semantics.annotate_bounds(report, IndistParams(epsilon=dp_epsilon, delta=dp_delta), m.space.n)

    if config.format == "csv":
        write_csv(semantic_trace_frame(report), config.output)
    else:
        write_json(report, config.output, exclude=("game_losses",))
    click.echo(
        f"epsilon_star={report.epsilon_star:.17g} "
        f"mass_exceeding({config.epsilon:g})={report.mass_exceeding(config.epsilon):.17g} "
        f"weighting={report.weighting}",
        err=config.output is None,
    )
