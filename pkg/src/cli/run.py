"""
Pipeline commands - validate, construct, evolve, feynman, microlocal, sweep.
"""

import logging
import time

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.config import Config, load_config
from src.errors import ConfigError, ExpressionError
from src.pipeline import EXIT_CONFIG, RunResult, run
from src.utils import generate_report, setup_logging

console = Console()


def resolve_config(config_source: str = None, preset: str = None, out_dir: str = None,
                   cutoff: int = None, order: int = None) -> Config:
    """
    Load a scenario and apply command-line overrides.

    A cutoff override also raises space_points to the smallest even value
    that keeps quantization alias-free.

    Raises:
        ConfigError: If the scenario or an override violates the schema
    """
    config = load_config(preset or config_source or 'config.yaml')
    space_points = None
    if cutoff is not None:
        space_points = max(config.space_points, 4 * cutoff + 2)
        space_points += space_points % 2
    return config.with_overrides(out_dir=out_dir, cutoff_k=cutoff, correction_order=order,
                                 space_points=space_points)


def _print_checks(result: RunResult) -> None:
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Check", style="cyan")
    table.add_column("Residual", justify="right")
    table.add_column("Tolerance", justify="right", style="dim")
    table.add_column("Status", justify="center")

    for check in result.report.checks:
        status = "[green]✓[/green]" if check.passed else "[red]✗[/red]"
        bound = f"{'≥' if check.comparison == 'min' else '≤'} {check.tolerance:.0e}"
        table.add_row(check.name, f"{check.residual:.3e}", bound, status)
    console.print(table)


def _print_metrics(result: RunResult) -> None:
    if not result.report.metrics:
        return
    metrics = Table(show_header=False, box=None)
    metrics.add_column("Metric", style="cyan")
    metrics.add_column("Value", justify="right", style="green")
    for name, value in sorted(result.report.metrics.items()):
        metrics.add_row(name, f"{value:.6g}")
    console.print(metrics)


def run_command(subcommand: str, config_source: str = None, preset: str = None, out_dir: str = None,
                cutoff: int = None, order: int = None, kernels: bool = False,
                log_level: str = None) -> int:
    """
    Run one pipeline subcommand and print its checks.

    Args:
        subcommand: Pipeline subcommand
        config_source: Scenario file
        preset: Shipped preset name (takes precedence over config_source)
        out_dir: Override for the output directory
        cutoff: Override for cutoff_k
        order: Override for correction_order
        kernels: Write kernels.bin
        log_level: Override for the configured log level

    Returns:
        Exit status (0 pass, 1 invariant failure, 2 configuration error)
    """
    try:
        config = resolve_config(config_source, preset, out_dir, cutoff, order)
    except (ConfigError, ExpressionError) as e:
        console.print(f"[red]✗ Invalid scenario: {e}[/red]")
        return EXIT_CONFIG

    setup_logging(config.log_file, getattr(logging, (log_level or config.log_level).upper()))

    console.print(Panel.fit(
        f"[bold cyan]{config.name}[/bold cyan]\n[dim]{config.description}[/dim]",
        subtitle=f"hadamard {subcommand}"
    ))

    start_time = time.time()
    result = run(subcommand, config, kernels=kernels)
    elapsed = time.time() - start_time

    _print_checks(result)
    _print_metrics(result)
    if 'sweep' in result.report.tables:
        sweep = Table(title="Sweep", show_header=True, header_style="bold cyan")
        columns = list(result.report.tables['sweep'][0]) if result.report.tables['sweep'] else []
        for column in columns:
            sweep.add_column(column, justify="right")
        for row in result.report.tables['sweep']:
            sweep.add_row(*(f"{row[c]:.4g}" if isinstance(row[c], float) else str(row[c]) for c in columns))
        console.print(sweep)

    stats = result.report.to_dict()
    stats['processing_time'] = elapsed
    logging.getLogger(__name__).info(generate_report(stats))

    if result.error:
        console.print(f"[red]✗ {result.error}[/red]")
    for kind, path in result.paths.items():
        console.print(f"  [dim]{kind}:[/dim] {path}")
    if result.status == 0:
        console.print(f"\n[green]✓ All {len(result.report.checks)} checks passed[/green]")
    else:
        failed = len(result.report.failed_checks())
        console.print(f"\n[red]✗ {failed} of {len(result.report.checks)} checks failed (exit {result.status})[/red]")
    return result.status
