"""Thin command-line client for the visitprep service, plus ``serve``.

All patient/admin commands talk HTTP to a running server; only ``serve`` and
``purge-sessions`` touch local state.
"""

from __future__ import annotations

import json
import sys
import time
from datetime import datetime, timedelta, timezone
from pathlib import Path

import click
import httpx


def _client(server: str, token: str | None = None) -> httpx.Client:
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    return httpx.Client(base_url=server, headers=headers, timeout=120.0)


def _fail_on_error(response: httpx.Response) -> dict:
    data = response.json()
    if response.status_code >= 400:
        code = data.get("code", response.status_code)
        raise click.ClickException(f"{code}: {data.get('message', response.text)}")
    return data


@click.group()
def main() -> None:
    """Clinic visit preparation service client."""


@main.command()
@click.option("--host", default=None, help="Bind address (default from env or 127.0.0.1).")
@click.option("--port", default=None, type=int, help="Port (default from env or 8000).")
def serve(host: str | None, port: int | None) -> None:
    """Run the HTTP service (configuration via VISITPREP_* env vars)."""
    import uvicorn

    from visitprep.service.app import create_app
    from visitprep.service.config import ServiceConfig

    config = ServiceConfig.from_env()
    if host:
        config.host = host
    if port:
        config.port = port
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


@main.command()
@click.argument("book_path", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--token", default=None, help="Admin bearer token.")
@click.option("--book-id", default=None)
@click.option("--upload", is_flag=True, help="Upload page files instead of sending a server-side path.")
def ingest(book_path: Path, server: str, token: str | None, book_id: str | None, upload: bool) -> None:
    """Ingest a guidebook folder and watch the job until it finishes."""
    with _client(server, token) as client:
        if upload:
            files = []
            for page in sorted(book_path.iterdir()):
                if page.is_file():
                    files.append(("files", (page.name, page.read_bytes())))
            data = {"book_id": book_id or book_path.name}
            response = client.post("/api/admin/books", files=files, data=data)
        else:
            response = client.post(
                "/api/admin/books",
                json={"path": str(book_path.resolve()), "book_id": book_id},
            )
        job = _fail_on_error(response)
        job_id = job["job_id"]
        click.echo(f"ingest job {job_id} started for book {job['book_id']!r}")

        with click.progressbar(length=100, label="indexing") as bar:
            shown = 0
            while True:
                job = _fail_on_error(client.get(f"/api/admin/ingest-jobs/{job_id}"))
                pct = int(job["progress"] * 100)
                if pct > shown:
                    bar.update(pct - shown)
                    shown = pct
                if job["status"] in ("Done", "Failed"):
                    if shown < 100 and job["status"] == "Done":
                        bar.update(100 - shown)
                    break
                time.sleep(0.5)
    if job["status"] == "Failed":
        raise click.ClickException(f"ingest failed: {job['error']}")
    click.echo(json.dumps(job["report"], indent=2))


@main.command()
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
def chat(server: str) -> None:
    """Run a full interview interactively against a running server."""
    with _client(server) as client:
        session = _fail_on_error(client.post("/api/sessions"))
        session_id = session["session_id"]
        for entry in session["transcript"]:
            click.echo(f"\n[assistant] {entry['text']}")
        ids = [t["topic_id"] for t in session["topics"]]
        click.echo(f"\ntopic ids: {', '.join(ids)}")
        raw = click.prompt("choose topic ids (comma-separated)")
        chosen = [t.strip() for t in raw.split(",") if t.strip()]
        view = _fail_on_error(
            client.post(f"/api/sessions/{session_id}/topics", json={"topic_ids": chosen})
        )
        _echo_new_system_turns(view["transcript"], 1)
        shown = len(view["transcript"])

        # elicitation until the panel appears
        while view["panel"] is None:
            text = click.prompt("[you]")
            view = _fail_on_error(
                client.post(f"/api/sessions/{session_id}/responses", json={"text": text})
            )
            shown = _echo_new_system_turns(view["transcript"], shown)

        click.echo("\n--- knowledge panel ---")
        click.echo(json.dumps(view["panel"], indent=2)[:2000])
        click.confirm("continue to reflection?", default=True, abort=True)
        view = _fail_on_error(client.post(f"/api/sessions/{session_id}/reflection"))
        shown = _echo_new_system_turns(view["transcript"], shown)
        while view["reflection_answered"] < len(view["reflection_prompts"]):
            text = click.prompt("[you]")
            view = _fail_on_error(
                client.post(f"/api/sessions/{session_id}/responses", json={"text": text})
            )
            shown = _echo_new_system_turns(view["transcript"], shown)

        view = _fail_on_error(client.post(f"/api/sessions/{session_id}/journey"))
        shown = _echo_new_system_turns(view["transcript"], shown)
        click.echo("\n--- your journey draft ---")
        click.echo(view["narrative"]["original_text"])
        if click.confirm("edit it?", default=False):
            edited = click.edit(view["narrative"]["original_text"])
            if edited:
                result = _fail_on_error(
                    client.put(
                        f"/api/sessions/{session_id}/narrative", json={"edited_text": edited.strip()}
                    )
                )
                click.echo(f"token change fraction: {result['token_change_fraction']:.3f}")
        view = _fail_on_error(client.post(f"/api/sessions/{session_id}/narrative/confirm"))
        questions = _fail_on_error(client.get(f"/api/sessions/{session_id}/questions"))
        click.echo("\n--- know-them questions ---")
        for q in questions["know_them"]:
            click.echo(f"* {q['text']}\n  answer: {q['answer']}\n  sources: {', '.join(q['sources'])}")
        click.echo("\n--- ask-them questions ---")
        for q in questions["ask_them"]:
            click.echo(f"* {q['text']}")


def _echo_new_system_turns(transcript: list[dict], shown: int) -> int:
    for entry in transcript[shown:]:
        if entry["speaker"] == "System":
            click.echo(f"\n[assistant] {entry['text']}")
    return len(transcript)


@main.command("purge-sessions")
@click.option("--data-dir", type=click.Path(path_type=Path), default=Path("./data"), show_default=True)
@click.option("--older-than-days", type=int, required=True)
@click.option("--yes", is_flag=True, help="Skip the confirmation prompt.")
def purge_sessions(data_dir: Path, older_than_days: int, yes: bool) -> None:
    """Delete session event logs whose last activity is older than the cutoff."""
    from visitprep.events import JsonlEventLog

    cutoff = datetime.now(timezone.utc) - timedelta(days=older_than_days)
    log = JsonlEventLog(data_dir)
    candidates = [
        sid
        for sid in log.list_sessions()
        if (events := log.session_events(sid)) and events[-1].at < cutoff
    ]
    if not candidates:
        click.echo("nothing to purge")
        return
    if not yes:
        click.confirm(f"delete {len(candidates)} session log(s)?", abort=True)
    removed = log.purge_before(cutoff)
    click.echo(f"purged {len(removed)} session(s)")


if __name__ == "__main__":
    sys.exit(main())
