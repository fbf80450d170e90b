"""Command-line client for the engine's HTTP API.

Without --url, commands run against an in-process application instance;
with --url, they talk to a remote server. Exit codes: 0 success, 2 parse
error, 3 fixture/data error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .catalog import iter_jsonl
from .config import load_config
from .errors import CatalogLoadError, EngineError

EXIT_PARSE_ERROR = 2
EXIT_FIXTURE_ERROR = 3


class GatewayClient:
    """httpx-backed client; in-process transport unless a base URL is given."""

    def __init__(self, url: Optional[str], config_path: Optional[str]):
        if url:
            import httpx

            self._client = httpx.Client(base_url=url, timeout=60.0)
        else:
            from fastapi.testclient import TestClient

            from .service.app import create_app

            try:
                app = create_app(load_config(config_path))
            except (CatalogLoadError, FileNotFoundError) as exc:
                click.echo(f"fixture error: {exc}", err=True)
                sys.exit(EXIT_FIXTURE_ERROR)
            self._client = TestClient(app)

    def request(self, method: str, path: str, **kwargs):
        return self._client.request(method, path, **kwargs)


pass_client = click.make_pass_decorator(GatewayClient)


@click.group()
@click.option("--url", default=None, help="Base URL of a running server; defaults to in-process.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.pass_context
def main(ctx: click.Context, url: Optional[str], config_path: Optional[str]) -> None:
    """Natural-language NFL data querying over the gridiron engine."""
    if ctx.invoked_subcommand == "serve":
        ctx.obj = (url, config_path)
    else:
        ctx.obj = GatewayClient(url, config_path)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.pass_obj
def serve(obj, host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    _url, config_path = obj
    try:
        app = create_app(load_config(config_path))
    except (CatalogLoadError, FileNotFoundError) as exc:
        click.echo(f"fixture error: {exc}", err=True)
        sys.exit(EXIT_FIXTURE_ERROR)
    uvicorn.run(app, host=host, port=port)


def _render_answer(payload: dict) -> str:
    answer = payload["answer"]
    lines = [answer["text"]]
    for table in answer["tables"]:
        lines.append("")
        lines.append(" | ".join(table["columns"]))
        for row in table["rows"]:
            lines.append(" | ".join(str(cell) for cell in row))
    for link in answer["media_links"]:
        lines.append(f"[video] {link['play_id']}: {link['url']}")
    for failure in answer["failures"]:
        lines.append(f"[!] {failure}")
    return "\n".join(lines)


def _post_prompt(client: GatewayClient, conversation_id: str, prompt: str) -> int:
    response = client.request(
        "POST", f"/v1/conversations/{conversation_id}/messages", json={"text": prompt}
    )
    if response.status_code == 422:
        detail = response.json()["detail"]
        click.echo("could not parse that prompt", err=True)
        for hint in detail.get("hints", []):
            click.echo(f"  try: {hint}", err=True)
        return EXIT_PARSE_ERROR
    response.raise_for_status()
    payload = response.json()
    click.echo(_render_answer(payload))
    click.echo(f"(message {payload['message_id']}, trace {payload['trace_id']})")
    return 0


@main.command()
@click.argument("prompt", required=False)
@click.option("--conversation", "conversation_id", default=None)
@pass_client
def ask(client: GatewayClient, prompt: Optional[str], conversation_id: Optional[str]) -> None:
    """Ask one question, or start a REPL when no prompt is given."""
    if conversation_id is None:
        response = client.request("POST", "/v1/conversations")
        response.raise_for_status()
        conversation_id = response.json()["conversation_id"]
        click.echo(f"conversation {conversation_id}")
    if prompt is not None:
        sys.exit(_post_prompt(client, conversation_id, prompt))
    click.echo("interactive mode; empty line to quit")
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            break
        if not line:
            break
        _post_prompt(client, conversation_id, line)


@main.command()
@click.argument("collection")
@click.argument("file", type=click.Path())
@pass_client
def ingest(client: GatewayClient, collection: str, file: str) -> None:
    """Ingest a JSON Lines file into a collection."""
    path = Path(file)
    if not path.exists():
        click.echo(f"fixture error: no such file {file}", err=True)
        sys.exit(EXIT_FIXTURE_ERROR)
    try:
        records = [record for _, record in iter_jsonl(path)]
    except (CatalogLoadError, EngineError) as exc:
        click.echo(f"fixture error: {exc}", err=True)
        sys.exit(EXIT_FIXTURE_ERROR)
    response = client.request(
        "POST", f"/v1/ingest/{collection}", json={"records": records}
    )
    if response.status_code != 200:
        click.echo(f"fixture error: {response.json()['detail']}", err=True)
        sys.exit(EXIT_FIXTURE_ERROR)
    click.echo(f"ingested {response.json()['count']} records into {collection}")


@main.group()
def bench() -> None:
    """Benchmark commands."""


@bench.command("run")
@click.argument("suite", type=click.Path())
@pass_client
def bench_run(client: GatewayClient, suite: str) -> None:
    response = client.request("POST", "/v1/bench/run", json={"suite_path": suite})
    if response.status_code == 404:
        click.echo(f"fixture error: {response.json()['detail']}", err=True)
        sys.exit(EXIT_FIXTURE_ERROR)
    response.raise_for_status()
    report = response.json()
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@bench.command("report")
@pass_client
def bench_report(client: GatewayClient) -> None:
    response = client.request("GET", "/v1/bench/report")
    if response.status_code == 404:
        click.echo("no benchmark report recorded yet", err=True)
        sys.exit(1)
    click.echo(json.dumps(response.json(), indent=2, sort_keys=True))


@main.command("dump-grammar")
@pass_client
def dump_grammar(client: GatewayClient) -> None:
    """Print the active grammar patterns and synonym lexicon."""
    response = client.request("GET", "/v1/grammar")
    response.raise_for_status()
    click.echo(json.dumps(response.json(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
