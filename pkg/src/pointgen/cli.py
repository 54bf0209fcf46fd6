"""Command-line entry points for the study service and record export."""

from __future__ import annotations

from pathlib import Path

import click


@click.group()
def main() -> None:
    """Pointing-gesture study toolkit."""


@main.command("serve-study")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True), help="Study config JSON.")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--store", "store_path", default="study_store", show_default=True,
              help="Directory for the append-only response log.")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_study(config_path: str, port: int, store_path: str, host: str) -> None:
    """Serve the two-stage perceptual study over HTTP."""
    import uvicorn

    from .service import ProceduralClipProvider, create_app
    from .skeleton import make_desk_arm
    from .study import StudyStore, load_study_config

    config = load_study_config(config_path)
    store = StudyStore(store_path)
    provider = ProceduralClipProvider(
        make_desk_arm(),
        aim_errors={m: 0.05 * i for i, m in enumerate(config.models)},
    )
    app = create_app(config, store, provider)
    uvicorn.run(app, host=host, port=port)


@main.command("export")
@click.option("--store", "store_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def export(store_path: str, out_path: str) -> None:
    """Export study responses as flat CSV for the statistics pipeline."""
    from .study import StudyStore, export_records

    df = export_records(StudyStore(store_path))
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out_path, index=False)
    click.echo(f"wrote {len(df)} rows to {out_path}")


if __name__ == "__main__":
    main()
