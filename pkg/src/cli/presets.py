"""
Presets command - Display the shipped scenarios.
"""

from rich.console import Console
from rich.table import Table
from rich.panel import Panel

from src.config import list_presets, load_config

console = Console()


def presets_command(detailed=False):
    """
    List shipped presets.

    Args:
        detailed: Show the grid and model of each preset
    """
    console.print(Panel.fit(
        "[bold cyan]Available Presets[/bold cyan]",
        subtitle="hadamard presets"
    ))

    presets = list_presets()
    if not presets:
        console.print("[yellow]No presets installed[/yellow]")
        return False

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("#", style="dim", width=3)
    table.add_column("Preset", style="cyan")
    table.add_column("Description", style="dim")

    if detailed:
        table.add_column("n", justify="right", style="green")
        table.add_column("K", justify="right", style="green")
        table.add_column("T", justify="right", style="green")
        table.add_column("h(t, x)", style="yellow")
        table.add_column("m(t, x)", style="yellow")

    for idx, (name, description) in enumerate(presets.items(), 1):
        row = [str(idx), name, description]
        if detailed:
            config = load_config(name)
            row.extend([str(config.dimension), str(config.cutoff_k), str(config.time_steps),
                        config.h_expr, config.m_expr])
        table.add_row(*row)

    console.print(table)

    console.print("\n[bold cyan]Common Commands:[/bold cyan]")
    console.print("  [green]hadamard validate --preset <name>[/green] - Run the preset's checks")
    console.print("  [green]hadamard construct --preset <name>[/green] - Build the adiabatic state")
    console.print("  [green]hadamard microlocal --preset <name>[/green] - Measure wavefront leakage")

    return True
