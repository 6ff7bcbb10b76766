"""Command line interface: ingest, calibrate, analyze, validate, curate,
generate, serve. The store root comes from --store or DQAF_STORE."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import DqafError
from .evidence import ClassificationPolicy
from .service import AnalysisService, ServiceConfig, Store, serve as run_server
from .synth import (
    FaultKind,
    FaultSpec,
    GenerationConfig,
    default_fault,
    generate_episode,
    make_reference_profile,
    make_task_context,
    run_validation,
)


def _service(store: str, mock: bool = True) -> AnalysisService:
    import os

    return AnalysisService(
        ServiceConfig(
            store_root=store,
            mock_providers=mock,
            semantic_url=os.environ.get("DQAF_SEMANTIC_URL"),
            feedback_url=os.environ.get("DQAF_FEEDBACK_URL"),
            api_key=os.environ.get("DQAF_API_KEY"),
        )
    )


@click.group()
def main():
    """Episode-level data quality assessment and feedback."""


_store_option = click.option(
    "--store",
    envvar="DQAF_STORE",
    default="./dqaf-store",
    show_default=True,
    help="store root directory",
)


@main.command()
@click.argument("file", type=click.Path(exists=True))
@_store_option
def ingest(file, store):
    """Ingest an episode (.dqaf.jsonl), task context (.task.json), or
    scripted semantic mock (.semmock.json) into the store."""
    from .episode import load_episode, load_task_context
    from .semantic import ScriptedMockProvider

    st = Store(store)
    path = Path(file)
    try:
        if path.name.endswith(".task.json"):
            ctx = load_task_context(path)
            st.put_context(ctx)
            click.echo(f"ingested task context {ctx.task_id}")
        elif path.name.endswith(".semmock.json"):
            mock = ScriptedMockProvider.load(path)
            st.put_mock(mock)
            click.echo(f"ingested semantic mock for {mock.episode_id}")
        else:
            e = load_episode(path)
            st.put_episode(e)
            click.echo(f"ingested episode {e.episode_id} ({e.n_samples} samples)")
    except DqafError as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.option("--task", "task_id", required=True)
@click.option("--refs", required=True, help="comma-separated reference episode ids")
@click.option("--percentile", default=95.0, show_default=True)
@_store_option
def calibrate(task_id, refs, percentile, store):
    """Calibrate a threshold profile from stored expert references."""
    svc = _service(store)
    try:
        profile = svc.calibrate(task_id, refs.split(","), percentile)
    except (DqafError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps({m.value: v for m, v in profile.thresholds.items()}, indent=2))
    for w in profile.warnings:
        click.echo(f"warning: {w}", err=True)


@main.command()
@click.argument("episode_id")
@click.option("--streaming", is_flag=True, help="simulate overlap with recording")
@_store_option
def analyze(episode_id, streaming, store):
    """Analyze a stored episode and persist its assessment."""
    svc = _service(store)
    try:
        a = svc.analyze(episode_id, mode="streaming" if streaming else "batch")
    except DqafError as exc:
        raise click.ClickException(str(exc))
    cls = a["classification"]
    click.echo(
        f"{episode_id}: q={a['q']:.2f} label={cls['label']} "
        f"reasons={','.join(cls['reasons']) or '-'}"
    )


@main.command()
@click.option("--successes", default=72, show_default=True)
@click.option("--failures", default=28, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--calibration-percentile", default=99.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="write .validation.json")
def validate(successes, failures, seed, calibration_percentile, out):
    """Run the synthetic validation harness and print the report table."""
    profile = make_reference_profile(seed, percentile=calibration_percentile)
    report = run_validation(
        successes, failures, seed, profile, ClassificationPolicy()
    )
    click.echo(report.table())
    if out:
        Path(out).write_text(json.dumps(report.to_json(), indent=2), encoding="utf-8")
        click.echo(f"wrote {out}")


@main.command()
@click.option("--task", "task_id", default=None)
@click.option("--min-quality", default=0.0, show_default=True)
@click.option("--label", default=None, type=click.Choice(["success", "failure"]))
@_store_option
def curate(task_id, min_quality, label, store):
    """Print a ranked manifest of assessed episodes."""
    svc = _service(store)
    for row in svc.curate(task_id, min_quality, label):
        click.echo(f"{row['episode_id']}\t{row['q']:.2f}\t{row['label']}")


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--faults",
    default="",
    help="comma-separated fault kinds (stall, saturate, chatter, jerk_burst, "
    "backtrack, premature_stop)",
)
@_store_option
def generate(seed, faults, store):
    """Generate a synthetic episode (with its semantic mock and context) into the store."""
    cfg = GenerationConfig()
    specs: list[FaultSpec] = []
    for i, name in enumerate(f for f in faults.split(",") if f):
        try:
            kind = FaultKind(name.strip())
        except ValueError:
            raise click.ClickException(f"unknown fault kind '{name}'")
        specs.append(default_fault(kind, cfg, offset=i))
    try:
        episode, mock, gt = generate_episode(seed, cfg, specs)
    except DqafError as exc:
        raise click.ClickException(str(exc))
    st = Store(store)
    st.put_episode(episode)
    st.put_mock(mock)
    st.put_context(make_task_context(cfg.task_id))
    click.echo(f"generated {episode.episode_id} (ground truth: {gt.label})")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--mock-providers", is_flag=True)
@_store_option
def serve(port, host, mock_providers, store):
    """Run the HTTP service."""
    import os

    run_server(
        ServiceConfig(
            store_root=store,
            mock_providers=mock_providers,
            semantic_url=os.environ.get("DQAF_SEMANTIC_URL"),
            feedback_url=os.environ.get("DQAF_FEEDBACK_URL"),
            api_key=os.environ.get("DQAF_API_KEY"),
        ),
        host=host,
        port=port,
    )


if __name__ == "__main__":
    sys.exit(main())
