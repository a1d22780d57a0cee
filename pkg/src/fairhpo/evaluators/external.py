"""Evaluate configurations in an external trainer process.

Wire protocol (UTF-8 JSON, one record per newline-terminated line, over the
child's stdin/stdout):

    request:  {"config": {...}, "budget": 0.37, "seed": 7, "phase": "train_eval"}
    response: {"accuracy": 0.61, "fairness": 0.8}   or   {"error": "message"}

A child handles requests one at a time until its stdin closes.
"""
from __future__ import annotations

import json
import queue
import subprocess
import threading
import time
from typing import Sequence

import numpy as np

from .base import EvaluationError, EvaluationRequest, EvaluationResult


class ProtocolError(EvaluationError):
    pass


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def encode_request(request: EvaluationRequest, phase: str = "train_eval") -> str:
    record = {
        "config": {k: _jsonable(v) for k, v in request.config.assignments.items()},
        "budget": request.budget,
        "seed": request.seed,
        "phase": phase,
    }
    return json.dumps(record, sort_keys=True) + "\n"


def decode_response(line: str) -> tuple[float, float]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed response line {line!r}: {exc}") from None
    if not isinstance(record, dict):
        raise ProtocolError(f"response must be a JSON object, got {line!r}")
    if "error" in record:
        raise EvaluationError(f"trainer reported error: {record['error']}")
    for name in ("accuracy", "fairness"):
        if name not in record:
            raise ProtocolError(f"response missing field {name!r}")
        v = record[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ProtocolError(f"field {name!r} is not a number: {v!r}")
        if not 0.0 <= v <= 1.0:
            raise ProtocolError(f"field {name!r}={v} outside [0, 1]")
    return float(record["accuracy"]), float(record["fairness"])


class _Worker:
    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        self.proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self.lines: queue.Queue = queue.Queue()
        self.stderr_tail: list[str] = []
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()

    def _pump_stdout(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def _pump_stderr(self):
        for line in self.proc.stderr:
            self.stderr_tail = (self.stderr_tail + [line.rstrip()])[-20:]

    def alive(self) -> bool:
        return self.proc.poll() is None

    def request(self, payload: str, timeout: float) -> str:
        try:
            self.proc.stdin.write(payload)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise self._died() from None
        try:
            line = self.lines.get(timeout=timeout)
        except queue.Empty:
            self.close(kill=True)
            raise EvaluationError(f"trainer timed out after {timeout}s") from None
        if line is None:
            raise self._died()
        return line

    def _died(self) -> EvaluationError:
        try:
            code = self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            code = None
        tail = "\n".join(self.stderr_tail[-5:])
        return EvaluationError(f"trainer exited mid-request (exit code {code}){': ' + tail if tail else ''}")

    def close(self, kill: bool = False):
        if kill:
            self.proc.kill()
        else:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class ExternalEvaluator:
    """Pool of trainer processes, one in-flight request per process.

    Dead or timed-out processes are replaced on the next request.
    """

    def __init__(self, command: Sequence[str], timeout: float = 600.0, workers: int = 1):
        self.command = list(command)
        self.timeout = timeout
        self._idle: queue.Queue = queue.Queue()
        for _ in range(max(1, workers)):
            self._idle.put(None)  # spawned lazily

    def __call__(self, request: EvaluationRequest) -> EvaluationResult:
        start = time.perf_counter()
        worker = self._idle.get()
        try:
            if worker is None or not worker.alive():
                try:
                    worker = _Worker(self.command)
                except OSError as exc:
                    raise EvaluationError(f"cannot start trainer {self.command}: {exc}") from None
            line = worker.request(encode_request(request), self.timeout)
            if not worker.alive() and not line.strip():
                raise worker._died()
            a, f = decode_response(line)
        finally:
            self._idle.put(worker if worker is not None and worker.alive() else None)
        return EvaluationResult(a, f, None, time.perf_counter() - start)

    def close(self):
        while not self._idle.empty():
            w = self._idle.get_nowait()
            if w is not None:
                w.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def evaluate_external(request: EvaluationRequest, endpoint: ExternalEvaluator) -> EvaluationResult:
    return endpoint(request)
