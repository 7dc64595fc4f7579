"""Client for an external chat-completions style LLM/VLM advisor.

The endpoint is configured through ``ADVISOR_API_URL``, ``ADVISOR_API_KEY``
and ``ADVISOR_MODEL``. Network access goes through a transport callable so the
same code path runs against recorded replies in tests.
"""

from __future__ import annotations

import base64
import json
import mimetypes
import os
from dataclasses import dataclass
from pathlib import Path
from string import Template
from typing import Callable, Iterable

import httpx

from ..errors import AdvisorUnavailable, MalformedResponse, TransportError
from ..library import data_path
from .protocol import AdvisorQuery, AdvisorVerdict, parse_verdict, verdict_schema

PROMPT_VERSION = "advisor_v1"

Transport = Callable[[dict], str]


@dataclass
class LlmConfig:
    url: str = ""
    api_key: str = ""
    model: str = ""
    temperature: float = 0.1
    top_p: float = 0.1
    timeout: float = 30.0
    max_repairs: int = 2
    prompt_version: str = PROMPT_VERSION

    @classmethod
    def from_env(cls, **overrides) -> "LlmConfig":
        cfg = cls(
            url=os.environ.get("ADVISOR_API_URL", ""),
            api_key=os.environ.get("ADVISOR_API_KEY", ""),
            model=os.environ.get("ADVISOR_MODEL", ""),
        )
        for key, value in overrides.items():
            setattr(cfg, key, value)
        return cfg


def render_prompt(query: AdvisorQuery, version: str = PROMPT_VERSION) -> str:
    template = Template(data_path("prompts", f"{version}.txt").read_text(encoding="utf-8"))
    return template.substitute(
        schema=json.dumps(verdict_schema(), sort_keys=True),
        detail=query.scene.detail,
        scene=query.scene.text.rstrip(),
        images=", ".join(Path(p).name for p in query.image_refs) or "none",
        bt=query.bt_document.rstrip(),
        skills=json.dumps(query.skill_summary, indent=1),
        conditions=json.dumps(query.condition_summary, indent=1),
        failure=json.dumps(query.failure) if query.failure else "none (pre-execution check)",
        feedback=query.feasibility_feedback or "none",
    )


def _image_part(path: str) -> dict:
    mime = mimetypes.guess_type(path)[0] or "image/png"
    data = base64.b64encode(Path(path).read_bytes()).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{data}"}}


def build_request(query: AdvisorQuery, cfg: LlmConfig) -> dict:
    prompt = render_prompt(query, cfg.prompt_version)
    if query.image_refs:
        content: str | list = [{"type": "text", "text": prompt}, *(_image_part(p) for p in query.image_refs)]
    else:
        content = prompt
    return {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "top_p": cfg.top_p,
        "response_format": {"type": "json_object"},
        "messages": [
            {"role": "system", "content": "You are a failure analyst for robot behavior trees. Answer in JSON."},
            {"role": "user", "content": content},
        ],
    }


class HttpTransport:
    def __init__(self, cfg: LlmConfig):
        if not cfg.url:
            raise AdvisorUnavailable("ADVISOR_API_URL is not set")
        self.cfg = cfg

    def __call__(self, payload: dict) -> str:
        url = self.cfg.url.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        headers = {"Authorization": f"Bearer {self.cfg.api_key}"} if self.cfg.api_key else {}
        try:
            resp = httpx.post(url, json=payload, headers=headers, timeout=self.cfg.timeout)
            resp.raise_for_status()
        except httpx.TimeoutException as exc:
            raise AdvisorUnavailable(f"advisor timed out after {self.cfg.timeout}s") from exc
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response envelope: {exc}") from exc


class ReplayTransport:
    """Returns recorded replies in order and keeps the requests it was given."""

    def __init__(self, replies: Iterable[str | Path]):
        self.replies = [Path(r).read_text(encoding="utf-8") if isinstance(r, Path) else r for r in replies]
        self.requests: list[dict] = []

    def __call__(self, payload: dict) -> str:
        self.requests.append(payload)
        if len(self.requests) > len(self.replies):
            raise TransportError("replay exhausted")
        return self.replies[len(self.requests) - 1]


def llm_advise(query: AdvisorQuery, cfg: LlmConfig, transport: Transport | None = None) -> AdvisorVerdict:
    transport = transport or HttpTransport(cfg)
    payload = build_request(query, cfg)
    last_error: MalformedResponse | None = None
    for _ in range(cfg.max_repairs + 1):
        reply = transport(payload)
        try:
            return parse_verdict(reply)
        except MalformedResponse as exc:
            last_error = exc
            payload = dict(payload)
            payload["messages"] = [
                *payload["messages"],
                {"role": "assistant", "content": reply},
                {"role": "user", "content": f"That reply was invalid ({exc}). Reply again with only a JSON object matching the schema."},
            ]
    raise MalformedResponse(f"no valid verdict after {cfg.max_repairs} repair attempts: {last_error}")


class LlmAdvisor:
    name = "llm"

    def __init__(self, cfg: LlmConfig | None = None, transport: Transport | None = None,
                 detail: str = "full", image_refs: tuple[str, ...] = ()):
        self.cfg = cfg or LlmConfig.from_env()
        self.transport = transport
        self.detail = detail
        self.image_refs = tuple(image_refs)

    def advise(self, query: AdvisorQuery) -> AdvisorVerdict:
        if self.image_refs and not query.image_refs:
            query.image_refs = self.image_refs
        return llm_advise(query, self.cfg, self.transport)
