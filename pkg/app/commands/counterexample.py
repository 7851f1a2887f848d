import click

from app.commands import build_config, parse_log_base
from app.services import bayes_semantics
from app.services.mechanism_io import counterexample_frame, write_csv, write_json


@click.command("counterexample")
@click.option("--n", type=int, default=500, show_default=True, help="Database length.")
@click.option("--epsilon", type=float, default=0.5, show_default=True)
@click.option("--delta", type=float, default=2.0 ** -20, show_default=True)
@click.option("--log-base", default="e", show_default=True, help="Base of the log in sigma^2 = log(1/delta)/epsilon^2.")
@click.option("--grid-step", type=float, help="Grid step (sigma/8 when omitted).")
@click.option("--tail-mass", type=float, help="Noise mass folded into the end cells.")
@click.option("--threshold", type=float, default=0.45, show_default=True, help="SD level of the summary mass.")
@click.option("--output", help="Trace CSV path (stdout when omitted).")
@click.option("--summary", "summary_path", help="Optional JSON path for the full report.")
def command(n, epsilon, delta, log_base, grid_step, tail_mass, threshold, output, summary_path):
    """Reality-oblivious adversary against a Gaussian noisy sum."""
    config = build_config(command="counterexample", n=n, epsilon=epsilon, delta=delta, output=output)
    report = bayes_semantics.reality_oblivious_counterexample(
        config.n, config.epsilon, config.delta, log_base=parse_log_base(log_base),
        grid_step=grid_step, tail_mass=tail_mass, threshold=threshold,
    )
    write_csv(counterexample_frame(report), config.output)
    if summary_path:
        write_json(report, summary_path)

    to_stderr = config.output is None
    click.echo(f"sigma={report.sigma:.17g} grid_step={report.grid_step:.17g}", err=to_stderr)
    for pair in report.touched_pairs:
        status = "PASS" if pair.passes else "FAIL"
        click.echo(f"{status} touched_pair {pair.x} | {pair.y} tight_delta={pair.tight_delta:.6e}", err=to_stderr)
    click.echo(
        f"mass_sd_at_least({report.threshold:g})={report.mass_sd_at_least:.17g} "
        f"max_sd={report.max_sd:.17g} game1_max_deviation={report.game1_max_deviation:.3e}",
        err=to_stderr,
    )
