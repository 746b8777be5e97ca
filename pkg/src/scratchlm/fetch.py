"""Single-project download plumbing for the public Scratch REST API.

Fetches the project metadata (for the access token and remix status), then
the project.json document, and wraps the result into an sb3-equivalent ZIP
that parse_project accepts.  Endpoints are overridable through arguments or
the SCRATCHLM_API_BASE / SCRATCHLM_PROJECT_HOST environment variables.
"""

from __future__ import annotations

import io
import json
import os
import time
import zipfile
from dataclasses import dataclass

import requests

from .errors import NetworkError, NotFound, RateLimited

DEFAULT_API_BASE = "https://api.scratch.mit.edu"
DEFAULT_PROJECT_HOST = "https://projects.scratch.mit.edu"

API_BASE_ENV = "SCRATCHLM_API_BASE"
PROJECT_HOST_ENV = "SCRATCHLM_PROJECT_HOST"


@dataclass
class FetchedProject:
    project_id: str
    archive: bytes  # sb3-equivalent ZIP holding project.json
    is_remix: bool
    title: str = ""


def _get(session: requests.Session, url: str, params=None, max_retries: int = 3,
         backoff: float = 1.0, sleep=time.sleep) -> requests.Response:
    attempt = 0
    while True:
        try:
            response = session.get(url, params=params, timeout=30)
        except requests.RequestException as exc:
            raise NetworkError(f"GET {url}: {exc}") from None
        if response.status_code == 404:
            raise NotFound(url)
        if response.status_code == 429:
            attempt += 1
            if attempt > max_retries:
                raise RateLimited(f"GET {url}: still throttled after "
                                  f"{max_retries} retries")
            sleep(backoff * 2 ** (attempt - 1))
            continue
        if response.status_code != 200:
            raise NetworkError(f"GET {url}: HTTP {response.status_code}")
        return response


def fetch_project(project_id: "int | str", api_base: str | None = None,
                  project_host: str | None = None,
                  session: requests.Session | None = None,
                  max_retries: int = 3, backoff: float = 1.0,
                  sleep=time.sleep) -> FetchedProject:
    """Download one project and wrap it as an in-memory sb3 archive."""
    project_id = str(project_id)
    if not project_id.isdigit():
        raise ValueError("project id must be numeric")
    api_base = (api_base or os.environ.get(API_BASE_ENV, DEFAULT_API_BASE)).rstrip("/")
    project_host = (project_host or os.environ.get(PROJECT_HOST_ENV,
                                                   DEFAULT_PROJECT_HOST)).rstrip("/")
    session = session or requests.Session()

    meta = _get(session, f"{api_base}/projects/{project_id}",
                max_retries=max_retries, backoff=backoff, sleep=sleep).json()
    token = meta.get("project_token")
    remix = meta.get("remix") or {}
    is_remix = bool(remix.get("parent") or remix.get("root"))

    params = {"token": token} if token else None
    body = _get(session, f"{project_host}/{project_id}", params=params,
                max_retries=max_retries, backoff=backoff, sleep=sleep).content
    try:
        json.loads(body)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"project {project_id}: body is not JSON: {exc}") from None

    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("project.json", body)
    return FetchedProject(project_id=project_id, archive=buffer.getvalue(),
                          is_remix=is_remix, title=meta.get("title", ""))
