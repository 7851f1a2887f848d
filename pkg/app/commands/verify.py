import click

from app.commands import build_config
from app.core.config import settings
from app.core.errors import VerificationFailure
from app.services import verifier
from app.services.mechanism_io import write_json


@click.command("verify")
@click.option("--suite", type=click.Choice(verifier.SUITES), default="all", show_default=True)
@click.option("--trials", type=int, default=settings.DEFAULT_TRIALS, show_default=True)
@click.option("--seed", type=int, default=settings.DEFAULT_SEED, show_default=True)
@click.option("--output", help="Optional JSON path for the suite report.")
def command(suite, trials, seed, output):
    """Run a seeded law suite; one PASS/FAIL line per law."""
    config = build_config(command="verify", trials=trials, seed=seed, output=output)
    report = verifier.run_suite(suite, trials=config.trials, seed=config.seed)
    for result in report.results:
        click.echo(result.line())
    if config.output:
        write_json(report, config.output)
    failed = [result.name for result in report.results if not result.passed]
    if failed:
        raise VerificationFailure(f"{len(failed)} law(s) failed: {', '.join(failed)}")
