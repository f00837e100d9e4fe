"""Main CLI for safe-admittance."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import typer
from InquirerPy import inquirer
from InquirerPy.base.control import Choice
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.prompt import Confirm

from safe_admittance.bounds import conservative_envelope, envelope_rows
from safe_admittance.config import DEFAULT_CONFIG, load_config, save_config
from safe_admittance.errors import ConfigRejected, LogFormatError, NumericalDivergence
from safe_admittance.metrics import compute_metrics, safety_report
from safe_admittance.models import MetricsRecord, SafetyReport, TrajectoryLog
from safe_admittance.scenario import Scenario, bundled_names, load_scenario, render_template
from safe_admittance.simulator import Design, build_design, build_subsystems, run_scenario
from safe_admittance.utils.display import (
    display_envelope,
    display_metrics,
    display_precheck,
    display_safety,
    fmt,
)
from safe_admittance.utils.filesystem import (
    ensure_out_dir,
    metrics_pairs,
    read_trajectory,
    write_key_values,
    write_metrics_rows,
    write_trajectory,
)

EXIT_CONFIG = 2
EXIT_SAFETY = 3
EXIT_DIVERGENCE = 4

app = typer.Typer(
    name="safe-admittance",
    help="Simulate switched model-reference admittance control with invariance-based safety",
    add_completion=False,
)
console = Console()


def setup_logging(verbose: bool) -> None:
    """Route package logging through a RichHandler on the CLI console."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _load(target: str) -> Scenario:
    """Load a scenario or exit with the configuration status."""
    try:
        return load_scenario(target)
    except ConfigRejected as exc:
        console.print(f"[red]Configuration rejected:[/] {exc}")
        raise typer.Exit(EXIT_CONFIG) from exc


def _design(scenario: Scenario) -> Design:
    try:
        return build_design(scenario)
    except ConfigRejected as exc:
        console.print(f"[red]Configuration rejected:[/] {exc}")
        raise typer.Exit(EXIT_CONFIG) from exc


def _resolve_out(out: Path | None, config: dict) -> Path:
    return ensure_out_dir(out or Path(config.get("out_dir", DEFAULT_CONFIG["out_dir"])))


@dataclass
class RunOutcome:
    """Artifacts and verdicts of one simulated scenario."""

    name: str
    log: TrajectoryLog
    report: SafetyReport
    metrics: MetricsRecord
    paths: list[Path]

    @property
    def exit_code(self) -> int:
        return EXIT_SAFETY if self.report.violated else 0


def execute_run(
    scenario: Scenario, design: Design, out_dir: Path, stem: str | None = None
) -> RunOutcome:
    """Simulate and write trajectory, safety report and metrics summary.

    Raises:
        NumericalDivergence: if the run diverges (nothing is written)
    """
    stem = stem or scenario.name
    trajectory = run_scenario(scenario, design)
    report = safety_report(trajectory)
    metrics = compute_metrics(trajectory, scenario.metrics.channel)
    paths = [
        write_trajectory(trajectory, out_dir / f"{stem}.csv"),
        write_key_values(report.as_pairs(), out_dir / f"{stem}_safety.txt"),
        write_key_values(metrics_pairs(metrics), out_dir / f"{stem}_metrics.txt"),
    ]
    return RunOutcome(stem, trajectory, report, metrics, paths)


def _batch_worker(
    path: str, out_dir: str, seed: int | None, dt: float | None, duration: float | None
) -> tuple[str, int, str, dict | None]:
    """Run one scenario file in a worker process.

    Returns:
        (scenario file, exit status, message, metrics row or None)
    """
    try:
        scenario = load_scenario(path).with_overrides(seed=seed, dt=dt, duration=duration)
        outcome = execute_run(scenario, build_design(scenario), Path(out_dir))
    except ConfigRejected as exc:
        return path, EXIT_CONFIG, str(exc), None
    except NumericalDivergence as exc:
        return path, EXIT_DIVERGENCE, str(exc), None
    message = "constraint violated" if outcome.report.violated else "ok"
    return path, outcome.exit_code, message, outcome.metrics.as_row(outcome.name)


def _simulate_batch(
    directory: Path,
    out_dir: Path,
    jobs: int,
    seed: int | None,
    dt: float | None,
    duration: float | None,
) -> None:
    paths = sorted(directory.glob("*.cfg"))
    if not paths:
        console.print(f"[yellow]No .cfg scenarios found in {directory}[/]")
        raise typer.Exit(EXIT_CONFIG)

    console.print(
        Panel.fit(
            f"[bold cyan]safe-admittance batch[/]\n\n"
            f"Scenarios: {len(paths)}\n"
            f"Workers: {jobs}\n"
            f"Output: {out_dir}",
            border_style="cyan",
        )
    )
    results = []
    with console.status(f"[bold green]Simulating {len(paths)} scenarios..."):
        with ProcessPoolExecutor(max_workers=max(1, jobs)) as pool:
            futures = [
                pool.submit(_batch_worker, str(p), str(out_dir), seed, dt, duration)
                for p in paths
            ]
            results = [f.result() for f in futures]

    rows = []
    for path, code, message, row in results:
        mark = "[green]✓[/]" if code == 0 else "[red]✗[/]"
        console.print(f"  {mark} {Path(path).name}: {message} (exit {code})")
        if row is not None:
            rows.append(row)
    if rows:
        write_metrics_rows(rows, out_dir / "batch_metrics.csv")
    raise typer.Exit(max(code for _, code, _, _ in results))


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    setup: bool = typer.Option(
        False,
        "--setup",
        help="Run configuration wizard to set defaults",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Show debug logging (subsystem switches, singular configurations)",
    ),
) -> None:
    """Simulate switched model-reference admittance control with invariance-based safety.

    Examples:

        safe-admittance simulate two_link_time_varying     # Bundled scenario

        safe-admittance simulate my.cfg --out runs --seed 3

        safe-admittance bounds two_link_time_varying       # Error envelope table

        safe-admittance metrics runs/two_link_time_varying.csv --channel sum

        safe-admittance compare two_link_constant_bound    # Proposed vs baseline
    """
    setup_logging(verbose)

    if setup:
        config = load_config()
        console.print(Panel.fit(
            "[bold cyan]Configuration Wizard[/]\n\n"
            "Set your default preferences",
            border_style="cyan",
        ))

        console.print("\n[bold cyan]Output Directory[/]")
        out_dir = inquirer.text(
            message="Default output directory:",
            default=str(config.get("out_dir", DEFAULT_CONFIG["out_dir"])),
        ).execute()

        console.print("\n[bold cyan]Batch Workers[/]")
        jobs = int(inquirer.number(
            message="Worker processes for scenario directories:",
            default=int(config.get("jobs") or DEFAULT_CONFIG["jobs"]),
            min_allowed=1,
        ).execute())

        console.print("\n[bold cyan]Error Channel[/]")
        channel = inquirer.select(
            message="Default error channel for metrics:",
            choices=[
                Choice(value="1", name="axis 1"),
                Choice(value="2", name="axis 2"),
                Choice(value="sum", name="sum of per-axis indices"),
                Choice(value="norm", name="Euclidean error norm"),
            ],
            default=str(config.get("channel", DEFAULT_CONFIG["channel"])),
        ).execute()

        save_config({"out_dir": out_dir.strip(), "jobs": jobs, "channel": channel})
        console.print("\n[green]Configuration saved successfully![/]")
        raise typer.Exit(0)

    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())


@app.command()
def simulate(
    target: str = typer.Argument(..., help="Scenario file, bundled name or directory of .cfg"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory"),
    seed: int | None = typer.Option(None, "--seed", "-s", help="Override the scenario seed"),
    dt: float | None = typer.Option(None, "--dt", help="Override the integration step (s)"),
    duration: float | None = typer.Option(None, "--duration", "-T", help="Override horizon (s)"),
    jobs: int | None = typer.Option(None, "--jobs", "-j", help="Worker processes for directories"),
) -> None:
    """Run pre-checks, simulate a scenario and write its artifacts.

    Exit status: 0 success, 2 configuration rejected, 3 constraint violated,
    4 numerical divergence.
    """
    config = load_config()
    out_dir = _resolve_out(out, config)

    if Path(target).is_dir():
        _simulate_batch(
            Path(target), out_dir, jobs or int(config.get("jobs", 1)), seed, dt, duration
        )

    scenario = _load(target)
    try:
        scenario = scenario.with_overrides(seed=seed, dt=dt, duration=duration)
    except ConfigRejected as exc:
        console.print(f"[red]Configuration rejected:[/] {exc}")
        raise typer.Exit(EXIT_CONFIG) from exc

    console.print(
        Panel.fit(
            f"[bold cyan]safe-admittance[/]\n\n"
            f"Scenario: {scenario.name}\n"
            f"Controller: {scenario.controller}\n"
            f"Horizon: {scenario.simulation.duration:g} s at dt = {scenario.simulation.dt:g} s\n"
            f"Seed: {scenario.seed if scenario.seed is not None else '[dim]none[/]'}",
            border_style="cyan",
        )
    )
    design = _design(scenario)
    display_precheck(
        console,
        design.models.A1,
        design.models.A2,
        design.a2_report.margins,
        design.gains.margin,
        design.box.dbar,
    )

    with console.status("[bold green]Simulating..."):
        try:
            outcome = execute_run(scenario, design, out_dir)
        except NumericalDivergence as exc:
            console.print(f"[red]Simulation diverged:[/] {exc}")
            raise typer.Exit(EXIT_DIVERGENCE) from exc

    display_safety(console, outcome.report)
    display_metrics(console, [(scenario.name, outcome.metrics)])
    console.print("\n[bold]Artifacts:[/]")
    for path in outcome.paths:
        console.print(f"  - {path}")
    raise typer.Exit(outcome.exit_code)


@app.command()
def bounds(
    target: str = typer.Argument(..., help="Scenario file or bundled name"),
) -> None:
    """Print the closed-form error envelope of a scenario."""
    scenario = _load(target)
    try:
        _, _, models = build_subsystems(scenario)
        envelope, p = conservative_envelope(scenario.envelope.D, models.A1, models.A2)
        rows = envelope_rows(models.A1, models.A2)
    except ConfigRejected as exc:
        console.print(f"[red]Configuration rejected:[/] {exc}")
        raise typer.Exit(EXIT_CONFIG) from exc

    display_envelope(console, rows, envelope)
    console.print(f"D = {fmt(envelope.D)}")
    console.print(f"D_bar = {fmt(envelope.dbar)} (subsystem {p})")
    if scenario.adaptation.recorded_P is not None:
        console.print(f"[dim]recorded P (metadata only): {list(scenario.adaptation.recorded_P)}[/]")


@app.command()
def metrics(
    csv_path: Path = typer.Argument(..., help="Trajectory CSV written by simulate"),
    channel: str | None = typer.Option(
        None, "--channel", "-c", help="Error channel: axis number, sum or norm"
    ),
) -> None:
    """Print error indices and control summaries of a trajectory CSV."""
    channel = channel or str(load_config().get("channel", DEFAULT_CONFIG["channel"]))
    try:
        if not csv_path.is_file():
            raise LogFormatError(f"{csv_path} does not exist")
        record = compute_metrics(read_trajectory(csv_path), channel)
    except LogFormatError as exc:
        console.print(f"[red]Invalid trajectory:[/] {exc}")
        raise typer.Exit(EXIT_CONFIG) from exc

    display_metrics(console, [(csv_path.stem, record)])
    for key, value in metrics_pairs(record):
        console.print(f"{key} = {value}")


@app.command()
def compare(
    target: str = typer.Argument(..., help="Scenario file or bundled name"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory"),
    seed: int | None = typer.Option(None, "--seed", "-s", help="Override the scenario seed"),
    duration: float | None = typer.Option(None, "--duration", "-T", help="Override horizon (s)"),
) -> None:
    """Run the proposed controller and the invariance baseline on identical inputs."""
    out_dir = _resolve_out(out, load_config())
    base = _load(target)

    outcomes: list[RunOutcome] = []
    for controller in ("proposed", "invariance_baseline"):
        try:
            scenario = base.with_overrides(seed=seed, duration=duration, controller=controller)
        except ConfigRejected as exc:
            console.print(f"[red]Configuration rejected:[/] {exc}")
            raise typer.Exit(EXIT_CONFIG) from exc
        design = _design(scenario)
        with console.status(f"[bold green]Simulating {controller}..."):
            try:
                outcomes.append(
                    execute_run(scenario, design, out_dir, f"{scenario.name}_{controller}")
                )
            except NumericalDivergence as exc:
                console.print(f"[red]{controller} diverged:[/] {exc}")
                raise typer.Exit(EXIT_DIVERGENCE) from exc

    display_metrics(console, [(o.name, o.metrics) for o in outcomes])
    rows = [o.metrics.as_row(o.name) for o in outcomes]
    csv_path = write_metrics_rows(rows, out_dir / f"{base.name}_compare.csv")

    proposed, baseline = outcomes
    smoother = baseline.metrics.tv_u > proposed.metrics.tv_u
    console.print(
        f"\nTV(u) baseline = {fmt(baseline.metrics.tv_u)}, "
        f"proposed = {fmt(proposed.metrics.tv_u)}"
    )
    console.print(f"chattering_ordering = {str(smoother).lower()}")
    console.print(f"\n[bold]Metrics:[/] {csv_path}")
    raise typer.Exit(max(o.exit_code for o in outcomes))


@app.command()
def init(
    path: Path = typer.Argument(..., help="Scenario file to create"),
    template: str | None = typer.Option(None, "--template", "-t", help="Bundled template name"),
    seed: int | None = typer.Option(None, "--seed", "-s", help="Seed for the new scenario"),
    headless: bool = typer.Option(
        False,
        "--headless",
        "--non-interactive",
        help="Non-interactive mode (first bundled template, seed 0, no overwrite)",
    ),
) -> None:
    """Create a scenario file from a bundled template."""
    names = bundled_names()
    if template is not None and template not in names:
        console.print(f"[red]Unknown template '{template}'.[/] Bundled: {', '.join(names)}")
        raise typer.Exit(EXIT_CONFIG)

    if headless:
        template = template or names[0]
        seed = 0 if seed is None else seed
        if path.exists():
            console.print(f"[red]{path} already exists.[/]")
            raise typer.Exit(1)
    else:
        if template is None:
            template = inquirer.select(
                message="Start from which scenario?",
                choices=[Choice(value=n, name=n) for n in names],
            ).execute()
        if seed is None:
            seed = int(inquirer.number(message="Random seed:", default=0, min_allowed=0).execute())
        if path.exists() and not Confirm.ask(f"\n[bold]Overwrite {path}?[/]"):
            console.print("[yellow]Exiting without changes.[/]")
            raise typer.Exit(0)

    name = path.name.removesuffix(".cfg")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_template(template, name, seed))
    console.print(f"[green]Wrote {path}[/] from template {template} (seed {seed})")


if __name__ == "__main__":
    app()
