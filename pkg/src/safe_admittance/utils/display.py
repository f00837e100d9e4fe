"""Display utilities for safe-admittance using Rich."""

import numpy as np
from rich.console import Console
from rich.table import Table

from safe_admittance.bounds import EnvelopeRow, ErrorEnvelope
from safe_admittance.models import MetricsRecord, SafetyReport


def fmt(value: float, digits: int = 6) -> str:
    """Format a number for table cells."""
    return f"{value:.{digits}g}"


def display_precheck(
    console: Console,
    A1: np.ndarray,
    A2: np.ndarray,
    a2_margins: np.ndarray,
    lyapunov_margin: float,
    dbar: float,
) -> None:
    """Display configuration-time checks in a rich table.

    Args:
        console: Rich console instance
        A1: Compliant subsystem matrix
        A2: Safety subsystem matrix
        a2_margins: Per-axis margins of the A2 admissibility check
        lyapunov_margin: Decay margin of the common Lyapunov matrix
        dbar: Disturbance envelope used to shrink the bounds
    """
    table = Table(title="Pre-checks")
    table.add_column("Check", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Status", justify="center")

    for name, A in (("A1 Hurwitz", A1), ("A2 Hurwitz", A2)):
        worst = float(np.max(np.linalg.eigvals(A).real))
        table.add_row(name, f"max Re = {fmt(worst)}", "[green]ok[/]")
    for i, margin in enumerate(a2_margins, 1):
        table.add_row(f"A2 condition axis {i}", fmt(float(margin)), "[green]ok[/]")
    table.add_row("Common Lyapunov margin", fmt(lyapunov_margin), "[green]ok[/]")
    table.add_row("Envelope D_bar", fmt(dbar), "")
    console.print(table)


def display_envelope(console: Console, rows: list[EnvelopeRow], envelope: ErrorEnvelope) -> None:
    """Display the error-bound table.

    Args:
        console: Rich console instance
        rows: Per-subsystem, per-axis eigen data (per unit D)
        envelope: Conservative envelope actually used
    """
    table = Table(title=f"Error envelope (D = {fmt(envelope.D)})")
    for name in ("p", "axis", "lambda_1", "lambda_2", "Delta", "t_s", "beta", "-1/k1"):
        table.add_column(name, justify="right")
    for row in rows:
        table.add_row(
            str(row.subsystem),
            str(row.axis),
            fmt(row.lam1),
            fmt(row.lam2),
            fmt(row.delta),
            fmt(row.t_s),
            fmt(row.beta),
            fmt(row.limit),
        )
    console.print(table)


def display_metrics(console: Console, records: list[tuple[str, MetricsRecord]]) -> None:
    """Display error indices and control summaries, one row per run.

    Args:
        console: Rich console instance
        records: (label, metrics) pairs
    """
    channel = records[0][1].channel if records else ""
    table = Table(title=f"Metrics (channel {channel})")
    table.add_column("Run", style="cyan")
    for name in ("ISE", "IAE", "ITSE", "ITAE", "RMS(u)", "TV(u)", "Switches"):
        table.add_column(name, justify="right")
    for label, rec in records:
        idx = rec.indices
        table.add_row(
            label,
            fmt(idx.ise),
            fmt(idx.iae),
            fmt(idx.itse),
            fmt(idx.itae),
            fmt(rec.rms_u),
            fmt(rec.tv_u),
            str(rec.switches),
        )
    console.print(table)


def display_safety(console: Console, report: SafetyReport) -> None:
    """Display the safety report.

    Args:
        console: Rich console instance
        report: SafetyReport to display
    """
    status = "[red]VIOLATED[/]" if report.violated else "[green]satisfied[/]"
    console.print(f"\n[bold]Constraints:[/] {status} (tolerance {fmt(report.tolerance)})")
    for i, h in enumerate(report.max_h, 1):
        console.print(f"  max |xi_{i}| - eta_{i}: {fmt(float(h))}")
    if report.first_violation is not None:
        console.print(f"  first violation at t = {fmt(report.first_violation)} s")
    console.print(
        f"  switches: {report.switches}, time in safety subsystem: "
        f"{fmt(report.time_in_safety)} s"
    )
