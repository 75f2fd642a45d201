"""Command-line front end.

A thin client over the service layer: each subcommand builds a request
model, calls the corresponding endpoint handler in-process, and prints the
response.  Exit codes: 0 success, 1 engine failures (search exhausted and
friends), 2 usage or parse errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
from fastapi import HTTPException

from .service import (
    ComprehendRequest,
    GameRequest,
    ProduceRequest,
    USAGE_STATUS,
    ValidateRequest,
    comprehend_endpoint,
    game_endpoint,
    produce_endpoint,
    validate_endpoint,
)

ENGINE_EXIT = 1
USAGE_EXIT = 2


def _fail(exc: HTTPException):
    detail = exc.detail if isinstance(exc.detail, dict) else {"code": "ERROR", "message": str(exc.detail)}
    click.echo(f"{detail['code']}: {detail['message']}", err=True)
    sys.exit(USAGE_EXIT if exc.status_code == USAGE_STATUS else ENGINE_EXIT)


def _write_tree(tree: dict, path: str):
    if path.endswith(".dot"):
        lines = ["digraph search {", "  rankdir=LR;"]
        for node in tree["nodes"]:
            shape = {"solution": "doublecircle", "expanded": "circle", "open": "ellipse"}[
                node["status"]
            ]
            lines.append(f'  n{node["id"]} [label="{node["id"]}" shape={shape}];')
        for node in tree["nodes"]:
            if node["parent"] is not None:
                lines.append(
                    f'  n{node["parent"]} -> n{node["id"]} [label="{node["construction"] or ""}"];'
                )
        lines.append("}")
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        Path(path).write_text(json.dumps(tree, indent=2, sort_keys=True) + "\n")


@click.group()
def main():
    """Bidirectional construction grammar engine and language-game harness."""


@main.command()
@click.option("--grammar", "grammar_path", required=True, type=click.Path(), help="Grammar JSON file.")
@click.option("--utterance", required=True, help="Utterance to comprehend.")
@click.option("--tree", "tree_path", default=None, help="Write the search tree (.json or .dot).")
def comprehend(grammar_path, utterance, tree_path):
    """Map an utterance to its meaning."""
    request = ComprehendRequest(
        utterance=utterance,
        grammar_path=grammar_path,
        include_tree=tree_path is not None,
    )
    try:
        response = comprehend_endpoint(request)
    except HTTPException as exc:
        _fail(exc)
    if response.penman:
        click.echo(response.penman)
        click.echo()
    click.echo(response.meaning_predicates)
    click.echo(
        f"; applied {len(response.applied)} constructions, "
        f"{response.nodes_created} nodes created",
        err=True,
    )
    if tree_path:
        _write_tree(response.tree, tree_path)


@main.command()
@click.option("--grammar", "grammar_path", required=True, type=click.Path(), help="Grammar JSON file.")
@click.option("--meaning", "meaning_path", required=True, type=click.Path(), help="Meaning file (.amr Penman block).")
@click.option("--tree", "tree_path", default=None, help="Write the search tree (.json or .dot).")
def produce(grammar_path, meaning_path, tree_path):
    """Express a meaning as an utterance."""
    if not Path(meaning_path).exists():
        click.echo(f"FILE_NOT_FOUND: no such meaning file: {meaning_path}", err=True)
        sys.exit(USAGE_EXIT)
    request = ProduceRequest(
        grammar_path=grammar_path,
        meaning_penman=Path(meaning_path).read_text(),
        include_tree=tree_path is not None,
    )
    try:
        response = produce_endpoint(request)
    except HTTPException as exc:
        _fail(exc)
    click.echo(response.utterance)
    click.echo(
        f"; applied {len(response.applied)} constructions, "
        f"{response.nodes_created} nodes created",
        err=True,
    )
    if tree_path:
        _write_tree(response.tree, tree_path)


@main.command()
@click.option("--grammar", "grammar_path", required=True, type=click.Path(), help="Grammar JSON file.")
def validate(grammar_path):
    """Check a grammar file against the construction invariants."""
    try:
        response = validate_endpoint(ValidateRequest(grammar_path=grammar_path))
    except HTTPException as exc:
        _fail(exc)
    click.echo(
        f"{response.name}: {response.constructions} constructions, "
        f"{response.links} categorial links, OK"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Game config JSON file.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Metrics CSV output path.")
def game(config_path, out_path):
    """Run a tutor-learner experiment and write the metrics CSV."""
    try:
        response = game_endpoint(GameRequest(config_path=config_path))
    except HTTPException as exc:
        _fail(exc)
    Path(out_path).write_text(response.csv)
    click.echo(
        f"{response.interactions} interactions, "
        f"final windowed success {response.final_windowed_success:.3f}, "
        f"inventory max {response.max_inventory} final {response.final_inventory}, "
        f"metrics written to {out_path}"
    )


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Start the HTTP service (requires uvicorn)."""
    try:
        import uvicorn
    except ImportError:
        click.echo("MISSING_DEPENDENCY: install the 'serve' extra for uvicorn", err=True)
        sys.exit(USAGE_EXIT)
    uvicorn.run("cxgram.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
