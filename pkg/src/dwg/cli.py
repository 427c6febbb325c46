"""Command-line entry point: compile, validate, visualize, run, replay, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .compiler import WorkflowIr, compile_model, compute_metrics, emit_dot, format_ir, format_metrics_table
from .dsl import parse_model_source
from .errors import DwgError
from .ontology import OntologyStore, load_ontology_paths
from .runtime import DialogueEngine, run_replay


def _fail(path: str, exc: DwgError) -> None:
    loc = ""
    if exc.line is not None:
        loc = f":{exc.line}" + (f":{exc.col}" if exc.col is not None else "")
    click.echo(f"{path}{loc}: error: {exc.message}", err=True)
    sys.exit(1)


def _load(model_path: str, ontology_paths: tuple[str, ...]) -> tuple[WorkflowIr, OntologyStore]:
    if not ontology_paths:
        click.echo("error: at least one --ontology file is required", err=True)
        sys.exit(1)
    for path in (model_path, *ontology_paths):
        if not Path(path).exists():
            click.echo(f"{path}: error: no such file", err=True)
            sys.exit(1)
    try:
        store = load_ontology_paths(ontology_paths)
    except DwgError as exc:
        _fail(ontology_paths[0] if len(ontology_paths) == 1 else "ontology", exc)
    try:
        model = parse_model_source(Path(model_path).read_text(encoding="utf-8"), store)
        ir = compile_model(model, store)
    except DwgError as exc:
        _fail(model_path, exc)
    for warning in ir.warnings:
        click.echo(f"{model_path}: warning: {warning}", err=True)
    return ir, store


ontology_option = click.option(
    "--ontology", "-o", "ontology_paths", multiple=True, required=True,
    help="Ontology file (.onto); may repeat.",
)


@click.group()
def main() -> None:
    """Dialogue workflow graph toolchain."""


@main.command("compile")
@click.argument("model")
@ontology_option
@click.option("--out", type=click.Path(), help="Write the IR document here.")
def cmd_compile(model: str, ontology_paths: tuple[str, ...], out: str | None) -> None:
    """Compile a model and print its metrics table."""
    ir, _ = _load(model, ontology_paths)
    if out:
        Path(out).write_text(format_ir(ir), encoding="utf-8")
    click.echo(format_metrics_table(compute_metrics(ir)))


@main.command("validate")
@click.argument("model")
@ontology_option
def cmd_validate(model: str, ontology_paths: tuple[str, ...]) -> None:
    """Compile without writing anything; exit 0 when the model is valid."""
    ir, _ = _load(model, ontology_paths)
    click.echo(f"ok: {len(ir.nodes)} nodes, {len(ir.edges)} edges, {len(ir.triggers)} triggers")


@main.command("viz")
@click.argument("model")
@ontology_option
@click.option("--out", type=click.Path(), help="DOT output path (default: stdout).")
def cmd_viz(model: str, ontology_paths: tuple[str, ...], out: str | None) -> None:
    """Compile a model and emit its DOT visualization."""
    ir, _ = _load(model, ontology_paths)
    dot = emit_dot(ir)
    if out:
        Path(out).write_text(dot, encoding="utf-8")
    else:
        click.echo(dot, nl=False)


@main.command("run")
@click.argument("model")
@ontology_option
def cmd_run(model: str, ontology_paths: tuple[str, ...]) -> None:
    """Interactive session: type utterances; :state, :history, :quit."""
    ir, store = _load(model, ontology_paths)
    engine = DialogueEngine(ir, store)
    state, outputs = engine.start_session()
    for line in outputs:
        click.echo(line)
    diag_seen = len(state.diagnostics)
    while True:
        try:
            text = input("> ")
        except EOFError:
            break
        text = text.strip()
        if not text:
            continue
        if text == ":quit":
            break
        if text == ":state":
            click.echo(f"node: {ir.nodes[state.current_node].id}")
            click.echo(f"topic stack: {[ir.nodes[i].id for i in state.topic_stack]}")
            pending = state.pending_intent
            if pending is None:
                click.echo("pending intent: none")
            else:
                slots = ", ".join(f"{k}={v}" for k, v in pending.slots.items()) or "no slots"
                click.echo(f"pending intent: {pending.intent} [{pending.status}] {slots}")
            continue
        if text == ":history":
            for turn in state.history:
                if turn.kind == "user":
                    click.echo(f"{turn.index:3} U: {turn.text}")
                else:
                    node_id = ir.nodes[turn.node].id if turn.node is not None else "?"
                    for message in turn.messages:
                        click.echo(f"{turn.index:3} S[{node_id}]: {message}")
            continue
        for line in engine.process_utterance(state, text):
            click.echo(line)
        for diag in state.diagnostics[diag_seen:]:
            click.echo(f"diagnostic: {diag}", err=True)
        diag_seen = len(state.diagnostics)


@main.command("replay")
@click.argument("model")
@ontology_option
@click.option("--script", "-s", required=True, type=click.Path(), help="Replay script file.")
@click.option("--show-transcript", is_flag=True, help="Print the full transcript.")
def cmd_replay(model: str, ontology_paths: tuple[str, ...], script: str,
               show_transcript: bool) -> None:
    """Run a scripted dialogue; exit 0 iff every expectation passes."""
    if not Path(script).exists():
        click.echo(f"{script}: error: no such file", err=True)
        sys.exit(1)
    ir, store = _load(model, ontology_paths)
    try:
        result = run_replay(ir, store, Path(script).read_text(encoding="utf-8"))
    except DwgError as exc:
        _fail(script, exc)
    if show_transcript:
        for line in result.transcript:
            click.echo(line)
    if result.failures:
        for failure in result.failures:
            click.echo(f"{script}: {failure.describe()}", err=True)
        sys.exit(2)
    click.echo(f"ok: {sum(1 for l in result.transcript if l.startswith('U:'))} user turns replayed")


@main.command("serve")
@click.argument("model")
@ontology_option
@click.option("--port", default=8077, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Serve a built console from this directory at /.")
@click.option("--idle-timeout", default=3600.0, show_default=True,
              help="Seconds before idle sessions are evicted.")
def cmd_serve(model: str, ontology_paths: tuple[str, ...], port: int, host: str,
              static_dir: str | None, idle_timeout: float) -> None:
    """Serve the session API (and optionally the browser console)."""
    import uvicorn

    from .server import create_app

    ir, store = _load(model, ontology_paths)
    if static_dir is None:
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        if bundled.is_dir():
            static_dir = str(bundled)
    if static_dir is not None and not Path(static_dir).is_dir():
        click.echo(f"{static_dir}: error: no such directory", err=True)
        sys.exit(1)
    app = create_app(ir, store, static_dir=static_dir, idle_timeout=idle_timeout)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        if isinstance(exc, SystemExit) and not exc.code:
            return
        click.echo(f"error: cannot serve on {host}:{port}: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
