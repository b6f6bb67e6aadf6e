"""
Config command - Show and validate a scenario.
"""

from pathlib import Path

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.syntax import Syntax

from src.config import load_config, preset_path
from src.errors import ConfigError, ExpressionError

console = Console()


def config_command(config_source='config.yaml', preset=None, show=False, validate=False):
    """
    Show or validate a scenario.

    Args:
        config_source: Scenario file
        preset: Preset name (takes precedence over config_source)
        show: Print the scenario file
        validate: Validate the scenario and summarize it
    """
    console.print(Panel.fit(
        "[bold cyan]Scenario Configuration[/bold cyan]",
        subtitle="hadamard config"
    ))

    try:
        config_path = preset_path(preset) if preset else Path(config_source)
    except ConfigError as e:
        console.print(f"[red]✗ {e}[/red]")
        return False

    if not config_path.exists():
        console.print(f"[red]✗ {config_path} not found[/red]")
        return False

    if show:
        with open(config_path, 'r') as f:
            config_content = f.read()

        syntax = Syntax(config_content, "yaml", theme="monokai", line_numbers=True)
        console.print(syntax)

    if validate or not show:
        try:
            config = load_config(str(config_path))
        except (ConfigError, ExpressionError) as e:
            console.print(f"\n[red]✗ Configuration validation failed: {e}[/red]")
            return False

        info_table = Table(show_header=False, box=None)
        info_table.add_column("Property", style="cyan")
        info_table.add_column("Value", style="green")

        info_table.add_row("Scenario", config.name)
        info_table.add_row("Dimension", str(config.dimension))
        info_table.add_row("Cutoff K", str(config.cutoff_k))
        info_table.add_row("Space points", str(config.space_points))
        info_table.add_row("Time grid", f"[{config.t_min:g}, {config.t_max:g}] x {config.time_steps}")
        info_table.add_row("h(t, x)", config.h_expr)
        info_table.add_row("m(t, x)", config.m_expr)
        info_table.add_row("u(t, x)", config.u_expr)
        info_table.add_row("Correction order", str(config.correction_order))
        info_table.add_row("Eigensolver", config.eigensolver)
        info_table.add_row("Checks", ", ".join(config.checks))
        info_table.add_row("Output Dir", config.out_dir)

        console.print(info_table)
        console.print("\n[green]✓ Configuration is valid[/green]")

    if not show and not validate:
        console.print("\n[bold cyan]Options:[/bold cyan]")
        console.print("  [green]hadamard config --show[/green] - Show full configuration")
        console.print("  [green]hadamard config --validate[/green] - Validate configuration")

    return True
