# 1. FIRST load environment variables before anything else
from dotenv import load_dotenv
load_dotenv()

# Now import everything else
import click
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import PrivacyToolError
from app.core.logging import logger
from app.services.mechanism_io import validation_detail

# Import commands
from app.commands import analyze, counterexample, gen, semantic, verify


class PrivacyToolGroup(click.Group):
    """Click group that turns library errors into exit codes.

    0 success, 1 verification failure, 2 input error.
    """

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PrivacyToolError as exc:
            logger.debug("Command failed with exit code %d: %s", exc.exit_code, exc.detail)
            click.echo(f"error: {exc.detail}", err=True)
            ctx.exit(exc.exit_code)
        except ValidationError as exc:
            click.echo(f"error: {validation_detail(exc)}", err=True)
            ctx.exit(2)


@click.group(cls=PrivacyToolGroup)
@click.version_option("1.0.0", prog_name=settings.APP_NAME)
def cli():
    """Differential privacy and Bayesian semantic privacy of finite mechanisms."""
    logger.debug("Starting %s (Environment: %s)", settings.APP_NAME, settings.ENVIRONMENT)


# Include all commands
cli.add_command(analyze.command)
cli.add_command(semantic.command)
cli.add_command(counterexample.command)
cli.add_command(verify.command)
cli.add_command(gen.command)


if __name__ == "__main__":
    cli()
