"""Expert backends behind the three generator roles.

The pipeline talks to one interface: ``complete(GenerationRequest) -> str``.
The offline backend is a pure function of (seed, request) and synthesizes
responses from the built-in registry and script bank, so whole runs are
hermetic and byte-reproducible. The remote backend speaks the JSON
chat-completion wire format over HTTP, logs every request/response pair to a
replay file, and the replay backend can re-serve those transcripts offline.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from . import chartspec
from .model import StyleDescriptor, canonical_json
from .shim import bank


class BackendError(RuntimeError):
    pass


class ExpertRole(str, Enum):
    JSON_EXPERT = "json_expert"
    DATA_EXPERT = "data_expert"
    CODE_EXPERT = "code_expert"


@dataclass(frozen=True)
class GenerationRequest:
    role: ExpertRole
    chart_type: str
    count: int = 1
    index: int = 0
    attempt: int = 1
    topic: Optional[str] = None
    template: Optional[dict] = None
    readme: Optional[str] = None
    style: Optional[StyleDescriptor] = None
    backend_name: Optional[str] = None
    feedback: Optional[str] = None

    def validate(self) -> list[str]:
        problems = []
        if self.count < 1:
            problems.append("count must be >= 1")
        if self.role in (ExpertRole.DATA_EXPERT, ExpertRole.CODE_EXPERT):
            if self.template is None or self.readme is None:
                problems.append(f"{self.role.value} request must carry template and readme")
        if self.role is ExpertRole.DATA_EXPERT and not self.topic:
            problems.append("data request must carry a topic")
        if self.role is ExpertRole.CODE_EXPERT and self.style is None:
            problems.append("code request must carry a style")
        return problems

    def fingerprint(self) -> str:
        ident = {
            "role": self.role.value,
            "chart_type": self.chart_type,
            "index": self.index,
            "attempt": self.attempt,
            "topic": self.topic,
            "style": self.style.to_dict() if self.style else None,
            "backend_name": self.backend_name,
        }
        return hashlib.sha256(canonical_json(ident).encode("utf-8")).hexdigest()


def derive_seed(seed: int, tag: str) -> int:
    return int(hashlib.sha256(f"{seed}:{tag}".encode("utf-8")).hexdigest()[:12], 16)


class BaseBackend:
    kind = "base"

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.call_counts: dict[str, int] = {}

    @property
    def total_calls(self) -> int:
        return sum(self.call_counts.values())

    def _record(self, role: ExpertRole) -> None:
        with self._lock:
            self.call_counts[role.value] = self.call_counts.get(role.value, 0) + 1

    def complete(self, request: GenerationRequest) -> str:
        problems = request.validate()
        if problems:
            raise BackendError("invalid request: " + "; ".join(problems))
        self._record(request.role)
        return self._complete(request)

    def _complete(self, request: GenerationRequest) -> str:
        raise NotImplementedError


class OfflineBackend(BaseBackend):
    """Deterministic stand-in for the expert LLMs. Responses depend only on
    (seed, request), never on call order, so concurrent use is safe and
    resumed runs reproduce the same corpus."""

    kind = "offline"

    def __init__(self, seed: int) -> None:
        super().__init__()
        self.seed = seed

    def _rng(self, request: GenerationRequest) -> random.Random:
        return random.Random(derive_seed(self.seed, request.fingerprint()))

    def _complete(self, request: GenerationRequest) -> str:
        if request.role is ExpertRole.JSON_EXPERT:
            try:
                spec = chartspec.build_chart_type_spec(request.chart_type)
            except chartspec.ChartSpecError as exc:
                raise BackendError(str(exc)) from exc
            return json.dumps(
                {"template": spec.template.exemplar, "readme": spec.readme}, sort_keys=True
            )
        if request.role is ExpertRole.DATA_EXPERT:
            rng = self._rng(request)
            try:
                payload = chartspec.synthesize_payload(rng, request.chart_type, request.topic)
                qas = chartspec.synthesize_qas(rng, request.chart_type, payload)
            except chartspec.ChartSpecError as exc:
                raise BackendError(str(exc)) from exc
            return json.dumps(
                {"payload": payload, "qas": [qa.to_dict() for qa in qas]}, sort_keys=True
            )
        if request.role is ExpertRole.CODE_EXPERT:
            try:
                return bank.instantiate(request.chart_type, request.style)
            except bank.BankError as exc:
                raise BackendError(str(exc)) from exc
        raise BackendError(f"unsupported role {request.role!r}")


def _load_prompt(name: str) -> str:
    return (Path(__file__).parent / "prompts" / f"{name}.txt").read_text(encoding="utf-8")


def build_messages(request: GenerationRequest) -> list[dict]:
    """Render the prompt asset for a request into chat messages. The README
    is embedded verbatim for data and code requests."""
    template_json = json.dumps(request.template, indent=2, sort_keys=True) if request.template else ""
    feedback = ""
    if request.feedback:
        feedback = f"\nYour previous attempt was rejected: {request.feedback}. Fix this."
    fields = {
        "chart_type": request.chart_type,
        "topic": request.topic or "",
        "template": template_json,
        "readme": request.readme or "",
        "index": request.index,
        "backend_name": request.backend_name or "matplotlib",
        "feedback": feedback,
    }
    if request.style is not None:
        fields.update(request.style.tokens())
        fields["annotated"] = "yes" if request.style.annotated else "no"
    prompt = _load_prompt(request.role.value).format(**fields)
    return [{"role": "user", "content": prompt}]


Transport = Callable[[dict], dict]


class RemoteBackend(BaseBackend):
    """Chat-completion HTTP backend. Endpoint and API key come from the
    environment (see config); a pluggable transport keeps tests hermetic.
    Every exchange is appended to a replay file."""

    kind = "remote_llm"

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "",
        temperature: float = 0.2,
        timeout: float = 120.0,
        transport: Optional[Transport] = None,
        replay_path: Optional[str | Path] = None,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
    ) -> None:
        super().__init__()
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.transport = transport or self._http_transport
        self.replay_path = Path(replay_path) if replay_path else None
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._replay_lock = threading.Lock()

    def _http_transport(self, body: dict) -> dict:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()

    def _complete(self, request: GenerationRequest) -> str:
        import time

        messages = build_messages(request)
        body = {"model": self.model, "messages": messages, "temperature": self.temperature}
        last_error: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = self.transport(body)
                break
            except Exception as exc:  # transport owns retry/backoff policy
                last_error = exc
                if attempt == self.max_attempts:
                    raise BackendError(f"transport failed after {attempt} attempts: {exc}") from exc
                time.sleep(self.backoff_base * 2 ** (attempt - 1))
        try:
            content = response["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {response!r}") from exc
        self._log_transcript(request, messages, content)
        return strip_fences(content)

    def _log_transcript(self, request: GenerationRequest, messages: list[dict], content: str) -> None:
        if self.replay_path is None:
            return
        row = {"fingerprint": request.fingerprint(), "messages": messages, "response": content}
        with self._replay_lock:
            self.replay_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.replay_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, sort_keys=True) + "\n")


class ReplayBackend(BaseBackend):
    """Serves previously logged remote transcripts, keyed by request
    fingerprint, for offline re-runs."""

    kind = "replay"

    def __init__(self, replay_path: str | Path) -> None:
        super().__init__()
        self.transcripts: dict[str, str] = {}
        with open(replay_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    self.transcripts[row["fingerprint"]] = row["response"]

    def _complete(self, request: GenerationRequest) -> str:
        key = request.fingerprint()
        if key not in self.transcripts:
            raise BackendError(f"no replay transcript for request {key[:12]}...")
        return strip_fences(self.transcripts[key])


def strip_fences(text: str) -> str:
    """Drop a surrounding markdown code fence, if any."""
    s = text.strip()
    if s.startswith("```"):
        lines = s.splitlines()
        if lines[-1].strip() == "```":
            return "\n".join(lines[1:-1])
        return "\n".join(lines[1:])
    return s
