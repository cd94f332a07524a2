# /// script
# requires-python = ">=3.11"
# dependencies = [
#     "typer",
#     "rich",
#     "matplotlib",
#     "sqlite-utils",
# ]
# ///
import json
import subprocess
from pathlib import Path
from typing import Optional

import typer  # pyright: ignore[reportMissingImports]
from rich.console import Console  # pyright: ignore[reportMissingImports]
from sqlite_utils import Database  # pyright: ignore[reportMissingImports]

PACKAGE_ROOT = Path(__file__).parent.parent.resolve()
DEV_FOLDER = PACKAGE_ROOT / "dev"

console = Console(
    record=True,
    width=120,
    color_system="auto",
)

app = typer.Typer(name="dev", help="Development CLI for the wpnav workspace.")


@app.command(name="fmt", help="Format the codebase using black and isort.")
def format_code():
    console.print("[bold green]Formatting code...[/bold green]")
    subprocess.run(
        ["uv", "run", "--active", "isort", str(PACKAGE_ROOT.as_posix())], check=True
    )
    console.print("[bold green]---[/bold green]")
    subprocess.run(
        ["uv", "run", "--active", "black", str(PACKAGE_ROOT.as_posix())], check=True
    )
    console.print("[bold green]Code formatting complete.[/bold green]")


@app.command(name="plot", help="Plot a navbench trace (and optional landmark geometry).")
def plot_trace(
    trace: Path,
    geometry: Optional[Path] = typer.Option(None, help="landmarks --out JSON"),
    out: Path = typer.Option(DEV_FOLDER / "trace.png", help="Image file"),
):
    import matplotlib  # pyright: ignore[reportMissingImports]

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt  # pyright: ignore[reportMissingImports]

    lines = [json.loads(ln) for ln in trace.read_text().splitlines() if ln.strip()]
    header = lines[0]
    steps = [ln for ln in lines if ln.get("kind") == "step"]
    fig, ax = plt.subplots(figsize=(8, 8))
    ax.plot([s["x"] for s in steps], [s["y"] for s in steps], "b-", lw=1, label="robot")
    ax.plot(
        [s["subgoal_x"] for s in steps],
        [s["subgoal_y"] for s in steps],
        "g.",
        ms=2,
        label="subgoal",
    )
    hits = [s for s in steps if s["collision"]]
    ax.plot([s["x"] for s in hits], [s["y"] for s in hits], "ro", label="collision")
    if steps and steps[0]["obstacles"]:
        for k in range(len(steps[0]["obstacles"])):
            ax.plot(
                [s["obstacles"][k][0] for s in steps],
                [s["obstacles"][k][1] for s in steps],
                color="0.7",
                lw=0.5,
            )
    if geometry is not None:
        geo = json.loads(geometry.read_text())
        ax.plot(*zip(*geo["spline"]), "k--", lw=0.8, label="spline")
        ax.plot([l["x"] for l in geo["landmarks"]], [l["y"] for l in geo["landmarks"]], "m^", label="landmarks")
    ax.plot(*header["start"], "ks")
    ax.plot(*header["goal"], "k*", ms=12)
    ax.set_aspect("equal")
    ax.set_title(f"{header['map']} / {header['generator']} / seed {header['seed']}")
    ax.legend(loc="best")
    fig.savefig(out, dpi=150)
    console.print(f"[bold green]Saved[/bold green] {out}")


@app.command(
    name="directional",
    help="Run a reduced benchmark at 5 and 20 obstacles and count failed checks.",
)
def directional(
    runs: int = typer.Option(5, help="Runs per cell"),
    jobs: int = typer.Option(4, help="Worker processes"),
    out: Path = typer.Option(DEV_FOLDER / "directional", help="Output directory"),
):
    cmd = ["uv", "run", "--active", "navbench", "bench"]
    for name in ("empty", "office"):
        cmd += ["--map", name]
    cmd += ["--count", "5", "--count", "20", "--velocity", "0.3"]
    cmd += ["--runs", str(runs), "--jobs", str(jobs), "--out", str(out)]
    subprocess.run(cmd, check=True)
    report = (out / "report.txt").read_text()
    checks = report.split("Directional checks:", 1)[-1].strip().splitlines()
    failed = [ln for ln in checks if ln.strip().startswith("FAIL")]
    style = "bold red" if failed else "bold green"
    console.print(f"{len(failed)} of {len(checks)} checks failed", style=style)


@app.command(name="runs", help="Summarize the runs table of a benchmark database.")
def runs(db: Path = typer.Argument(..., help="runs.db")):
    database = Database(db)
    for row in database.query(
        "select generator, count(*) as n, avg(success) as success, sum(collisions) as collisions "
        "from runs where error = '' group by generator order by generator"
    ):
        console.print(row)


if __name__ == "__main__":
    try:
        app()
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise e
