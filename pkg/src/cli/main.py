#!/usr/bin/env python3
"""
Main entry point for the hadamard CLI.

Every pipeline subcommand reads one scenario (a YAML/JSON file or a shipped
preset), runs its checks and writes report.json and profiles.csv into the
scenario's output directory. The exit status is 0 when every check passes,
1 when an invariant fails and 2 for an invalid scenario.
"""

import click
from rich.console import Console

from src.cli import __version__

console = Console()


SCENARIO_OPTIONS = [
    click.option('--config', '-c', 'config_source', default='config.yaml', show_default=True,
                 help='Scenario file (YAML or JSON)'),
    click.option('--preset', '-p', help='Use a shipped preset instead of a scenario file'),
    click.option('--out-dir', '-o', help='Override the output directory'),
    click.option('--cutoff', '-k', type=int, help='Override the frequency cutoff K'),
    click.option('--order', '-r', type=int, help='Override the adiabatic correction order'),
    click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
                 help='Override the configured log level'),
]


def scenario_options(func):
    """Options shared by the pipeline subcommands."""
    for option in reversed(SCENARIO_OPTIONS):
        func = option(func)
    return func


def _run(ctx, subcommand, **options):
    from src.cli.run import run_command
    ctx.exit(run_command(subcommand, **options))


@click.group()
@click.version_option(version=__version__, prog_name="hadamard")
def cli():
    """
    hadamard - Pure Hadamard states for Dirac fields on I x S^1

    Workflow:
    1. hadamard presets - List the shipped scenarios
    2. hadamard validate - Run a scenario's invariant checks
    3. hadamard construct - Build and verify the adiabatic state
    4. hadamard feynman / evolve / microlocal / sweep - Kernels, propagation, wavefront tests
    """
    pass


@cli.command()
@scenario_options
@click.pass_context
def validate(ctx, **options):
    """Run every check listed in the scenario."""
    _run(ctx, 'validate', **options)


@cli.command()
@scenario_options
@click.pass_context
def construct(ctx, **options):
    """Build the adiabatic state and verify the state conditions."""
    _run(ctx, 'construct', **options)


@cli.command()
@scenario_options
@click.option('--kernels/--no-kernels', default=False, help='Write retarded kernels to kernels.bin')
@click.pass_context
def evolve(ctx, **options):
    """Propagate on the time grid and measure the integrator order."""
    _run(ctx, 'evolve', **options)


@cli.command()
@scenario_options
@click.option('--kernels/--no-kernels', default=False, help='Write Feynman kernels to kernels.bin')
@click.pass_context
def feynman(ctx, **options):
    """Build the propagator kernels and two-point functions."""
    _run(ctx, 'feynman', **options)


@cli.command()
@scenario_options
@click.pass_context
def microlocal(ctx, **options):
    """Measure the temporal-frequency leakage of evolved wavepackets."""
    _run(ctx, 'microlocal', **options)


@cli.command()
@scenario_options
@click.pass_context
def sweep(ctx, **options):
    """Tabulate defect decay over the configured K or r values."""
    _run(ctx, 'sweep', **options)


@cli.command()
@click.option('--detailed', is_flag=True, help='Show grid and model of each preset')
def presets(detailed):
    """List shipped preset scenarios."""
    from src.cli.presets import presets_command
    presets_command(detailed)


@cli.command()
@click.option('--config', '-c', 'config_source', default='config.yaml', show_default=True,
              help='Scenario file (YAML or JSON)')
@click.option('--preset', '-p', help='Use a shipped preset instead of a scenario file')
@click.option('--show', is_flag=True, help='Show the scenario file')
@click.option('--validate', is_flag=True, help='Validate the scenario')
@click.pass_context
def config(ctx, config_source, preset, show, validate):
    """Show or validate a scenario."""
    from src.cli.config import config_command
    if not config_command(config_source, preset, show, validate):
        ctx.exit(2)


if __name__ == '__main__':
    cli()
