"""Adapter command line: export engine inputs, execute refinement plans."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import click

from .encoder import EncoderUnavailableError, make_encoder
from .executor import ReferenceBackend, execute_plan
from .export import export_embeddings


@click.group()
def main():
    """Bridge between real images/prompts and the refineplan engine."""


@main.command("export")
@click.option("--image", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--prompt", required=True)
@click.option("--out", type=click.Path(), required=True, help="Output directory for GRT files.")
@click.option("--backend", type=click.Choice(["hashed", "clip"]), default="hashed", show_default=True)
@click.option("--model", default=None, help="Model identifier for the clip backend.")
def cmd_export(image, prompt, out, backend, model):
    """Encode one image/prompt pair into a full engine input bundle."""
    try:
        encoder = make_encoder(backend, model)
    except EncoderUnavailableError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    manifest = export_embeddings(image, prompt, out, encoder)
    click.echo(f"exported {len(manifest.files)} files ({manifest.model}, dim {manifest.dim}) -> {out}")


@main.command("execute")
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--image", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Override the image recorded in the plan.")
@click.option("--out", type=click.Path(), required=True, help="Refined image PNG path.")
def cmd_execute(plan_path, image, out):
    """Run a plan's two stages with the deterministic reference backend."""
    result = execute_plan(plan_path, out, backend=ReferenceBackend(), image_path=image)
    click.echo(f"refined image -> {result}")


@main.command("demo")
@click.option("--image", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--prompt", required=True)
@click.option("--out", type=click.Path(), required=True, help="Working directory.")
def cmd_demo(image, prompt, out):
    """Full round trip: export, run the engine's plan command, execute it."""
    out_dir = Path(out)
    manifest = export_embeddings(image, prompt, out_dir / "export", make_encoder("hashed"))
    engine = [
        sys.executable, "-m", "refineplan.cli", "plan",
        "--image-tokens", str(out_dir / "export" / "image_tokens.grt"),
        "--phrase-embeds", str(out_dir / "export" / "phrases.grt"),
        "--conllu", str(out_dir / "export" / "prompt.conllu"),
        "--bank", str(out_dir / "export" / "bank.grt"),
        "--image", str(image),
        "--out", str(out_dir / "plan"),
    ]
    proc = subprocess.run(engine, capture_output=True, text=True)
    if proc.returncode != 0:
        click.echo(proc.stderr.strip(), err=True)
        sys.exit(proc.returncode)
    click.echo(proc.stdout.strip())
    refined = execute_plan(out_dir / "plan" / "plan.json", out_dir / "refined.png")
    click.echo(f"demo complete ({manifest.model}) -> {refined}")


if __name__ == "__main__":
    main()
