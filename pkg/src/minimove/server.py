"""The MiniMove language server: LSP over stdio.

One reader loop ingests client messages and answers definition / hover /
completion requests straight from the last published index; one worker
thread runs at most one compile→analyze pipeline at a time, debounced 50ms
after the latest change (a newer change postpones an unstarted run). Index
replacement is atomic, so queries never observe a half-built pipeline.

Lifecycle follows the protocol: ``shutdown`` then ``exit`` exits 0, ``exit``
without ``shutdown`` exits 1, malformed framing is a connection error.
"""

from __future__ import annotations

import argparse
import os
import sys
import threading
import time
import traceback
import urllib.parse
import urllib.request
from typing import BinaryIO, Optional

from .analysis import CompletionItemSet, HoverContent
from .engine import PipelineResult, Toggles, Workspace
from .rpc import FramingError, MessageWriter, read_message
from .source import Diagnostic, LineIndex

DEBOUNCE_SECONDS = 0.05
METRICS_METHOD = "mini/metrics"

_ERR_METHOD_NOT_FOUND = -32601
_ERR_INVALID_REQUEST = -32600
_ERR_INTERNAL = -32603
_ERR_NOT_INITIALIZED = -32002

_COMPLETION_KINDS = {
    "function": 3,
    "field": 5,
    "variable": 6,
    "parameter": 6,
    "module": 9,
    "record": 22,
}

_SEVERITIES = {"error": 1, "warning": 2}


def uri_to_path(uri: str) -> str:
    parsed = urllib.parse.urlparse(uri)
    if parsed.scheme and parsed.scheme != "file":
        return uri
    return urllib.request.url2pathname(parsed.path)


def path_to_uri(path: str) -> str:
    return "file://" + urllib.request.pathname2url(os.path.abspath(path))


class Server:
    def __init__(self, stdin: BinaryIO, stdout: BinaryIO, log_path: Optional[str] = None):
        self._stdin = stdin
        self._writer = MessageWriter(stdout)
        self._log_path = log_path
        self._log_lock = threading.Lock()
        self.workspace: Optional[Workspace] = None
        self._doc_versions: dict[str, int] = {}
        self._shutdown = False
        self._exit_code: Optional[int] = None
        self._cond = threading.Condition()
        self._pending: dict[str, float] = {}  # package root -> not-before time
        self._stopping = False
        self._worker = threading.Thread(target=self._worker_loop, daemon=True)

    # --- plumbing -------------------------------------------------------------

    def _log(self, text: str) -> None:
        if self._log_path is None:
            return
        with self._log_lock:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(f"{time.strftime('%H:%M:%S')} {text}\n")

    def _respond(self, msg_id, result=None, error=None) -> None:
        response: dict = {"jsonrpc": "2.0", "id": msg_id}
        if error is not None:
            response["error"] = error
        else:
            response["result"] = result
        self._writer.write(response)

    def _notify(self, method: str, params: dict) -> None:
        self._writer.write({"jsonrpc": "2.0", "method": method, "params": params})

    # --- main loop --------------------------------------------------------------

    def run(self) -> int:
        self._worker.start()
        try:
            while True:
                try:
                    message = read_message(self._stdin)
                except FramingError as exc:
                    self._log(f"framing error: {exc}")
                    print(f"minimove-server: framing error: {exc}", file=sys.stderr)
                    self._exit_code = 2
                    break
                if message is None:
                    if self._exit_code is None:
                        self._exit_code = 0 if self._shutdown else 1
                    break
                self._dispatch(message)
                if self._exit_code is not None:
                    break
        finally:
            with self._cond:
                self._stopping = True
                self._cond.notify_all()
            self._worker.join(timeout=5)
        return self._exit_code if self._exit_code is not None else 0

    def _dispatch(self, message: dict) -> None:
        method = message.get("method")
        msg_id = message.get("id")
        if method is None:
            return  # response to a server request; we never send any
        params = message.get("params") or {}
        if msg_id is not None:
            self._log(f"--> request {method} #{msg_id}")
            handler = getattr(self, "_req_" + _snake(method), None)
            if handler is None:
                self._respond(
                    msg_id,
                    error={
                        "code": _ERR_METHOD_NOT_FOUND,
                        "message": f"method not found: {method}",
                    },
                )
                return
            if method != "initialize" and self.workspace is None and method != "shutdown":
                self._respond(
                    msg_id,
                    error={"code": _ERR_NOT_INITIALIZED, "message": "not initialized"},
                )
                return
            try:
                self._respond(msg_id, result=handler(params))
            except Exception as exc:  # exactly one response per request
                self._log(f"request failed: {traceback.format_exc()}")
                self._respond(
                    msg_id, error={"code": _ERR_INTERNAL, "message": str(exc)}
                )
        else:
            self._log(f"--> notification {method}")
            handler = getattr(self, "_not_" + _snake(method), None)
            if handler is None:
                return
            try:
                handler(params)
            except Exception:
                self._log(f"notification failed: {traceback.format_exc()}")

    # --- lifecycle ---------------------------------------------------------------

    def _req_initialize(self, params: dict):
        toggles = Toggles.from_dict(params.get("initializationOptions"))
        self.workspace = Workspace(toggles)
        self._log(f"initialize, toggles={toggles.to_dict()}")
        return {
            "capabilities": {
                "textDocumentSync": 1,  # full-document sync
                "definitionProvider": True,
                "hoverProvider": True,
                "completionProvider": {"triggerCharacters": [".", ":"]},
            },
            "serverInfo": {"name": "minimove-server", "version": "0.1.0"},
        }

    def _not_initialized(self, params: dict) -> None:
        return None

    def _req_shutdown(self, params: dict):
        self._shutdown = True
        return None

    def _not_exit(self, params: dict) -> None:
        self._exit_code = 0 if self._shutdown else 1

    # --- document sync --------------------------------------------------------------

    def _not_text_document_did_open(self, params: dict) -> None:
        doc = params["textDocument"]
        path = uri_to_path(doc["uri"])
        self._doc_versions[path] = doc.get("version", 0)
        assert self.workspace is not None
        self.workspace.open_document(path, doc["text"])
        self._schedule(self.workspace.session_for_file(path).root)

    def _not_text_document_did_change(self, params: dict) -> None:
        doc = params["textDocument"]
        path = uri_to_path(doc["uri"])
        version = doc.get("version", 0)
        if version <= self._doc_versions.get(path, -1):
            self._log(f"stale didChange for {path} dropped (v{version})")
            return
        changes = params.get("contentChanges") or []
        if not changes:
            return
        self._doc_versions[path] = version
        assert self.workspace is not None
        self.workspace.change_document(path, changes[-1]["text"])
        self._schedule(self.workspace.session_for_file(path).root)

    def _not_text_document_did_save(self, params: dict) -> None:
        path = uri_to_path(params["textDocument"]["uri"])
        assert self.workspace is not None
        self.workspace.notify_file_event(path)
        for root in list(self.workspace.sessions):
            self._schedule(root)

    def _not_text_document_did_close(self, params: dict) -> None:
        path = uri_to_path(params["textDocument"]["uri"])
        self._doc_versions.pop(path, None)
        assert self.workspace is not None
        self.workspace.close_document(path)

    def _not_workspace_did_change_watched_files(self, params: dict) -> None:
        assert self.workspace is not None
        for change in params.get("changes", []):
            self.workspace.notify_file_event(uri_to_path(change.get("uri", "")))
        for root in list(self.workspace.sessions):
            self._schedule(root)

    # --- queries ---------------------------------------------------------------------

    def _resolve_position(self, params: dict) -> Optional[tuple]:
        assert self.workspace is not None
        path = uri_to_path(params["textDocument"]["uri"])
        session = self.workspace.find_session_for_file(path)
        if session is None or session.published is None:
            return None
        line_index = session.published.line_index(path)
        if line_index is None:
            return None
        pos = params["position"]
        offset = line_index.to_offset(pos["line"], pos["character"])
        return session, path, offset

    def _location_payload(self, loc) -> Optional[dict]:
        assert self.workspace is not None
        target_index = self.workspace.line_index_for(loc.file_id)
        if target_index is None:
            return None
        start = target_index.to_position(loc.start)
        end = target_index.to_position(loc.end)
        return {
            "uri": path_to_uri(loc.file_id),
            "range": {
                "start": {"line": start[0], "character": start[1]},
                "end": {"line": end[0], "character": end[1]},
            },
        }

    def _req_text_document_definition(self, params: dict):
        resolved = self._resolve_position(params)
        if resolved is None:
            return None
        session, path, offset = resolved
        loc = session.definition_at(path, offset)
        if loc is None:
            return None
        return self._location_payload(loc)

    def _req_text_document_hover(self, params: dict):
        resolved = self._resolve_position(params)
        if resolved is None:
            return None
        session, path, offset = resolved
        content: Optional[HoverContent] = session.hover_at(path, offset)
        if content is None:
            return None
        payload: dict = {
            "contents": {"kind": "plaintext", "value": content.render()}
        }
        use_loc = session.hover_range_at(path, offset)
        if use_loc is not None:
            line_index = session.published.line_index(path)
            if line_index is not None:
                start = line_index.to_position(use_loc.start)
                end = line_index.to_position(use_loc.end)
                payload["range"] = {
                    "start": {"line": start[0], "character": start[1]},
                    "end": {"line": end[0], "character": end[1]},
                }
        return payload

    def _req_text_document_completion(self, params: dict):
        resolved = self._resolve_position(params)
        if resolved is None:
            return {"isIncomplete": False, "items": []}
        session, path, offset = resolved
        items: CompletionItemSet = session.completion_at(path, offset)
        return {
            "isIncomplete": False,
            "items": [
                {
                    "label": label,
                    "kind": _COMPLETION_KINDS.get(kind, 1),
                    "detail": detail,
                }
                for label, kind, detail in items.items
            ],
        }

    # --- pipeline worker ------------------------------------------------------------

    def _schedule(self, package_root: str) -> None:
        with self._cond:
            self._pending[package_root] = time.monotonic() + DEBOUNCE_SECONDS
            self._cond.notify_all()

    def _worker_loop(self) -> None:
        while True:
            with self._cond:
                while not self._pending and not self._stopping:
                    self._cond.wait()
                if self._stopping:
                    return
                root, not_before = min(self._pending.items(), key=lambda kv: kv[1])
                now = time.monotonic()
                if now < not_before:
                    self._cond.wait(timeout=not_before - now)
                    continue
                del self._pending[root]
            try:
                self._run_pipeline(root)
            except Exception:
                self._log(f"pipeline crashed: {traceback.format_exc()}")

    def _run_pipeline(self, root: str) -> None:
        assert self.workspace is not None
        session = self.workspace.session(root)
        result = session.run_pipeline()
        self._publish(result)

    def _publish(self, result: PipelineResult) -> None:
        line_index_cache: dict[str, Optional[LineIndex]] = {}

        def index_for(file_id: str) -> Optional[LineIndex]:
            if file_id not in line_index_cache:
                assert self.workspace is not None
                line_index_cache[file_id] = self.workspace.line_index_for(file_id)
            return line_index_cache[file_id]

        for file_id in sorted(result.diagnostics):
            diags = result.diagnostics[file_id]
            payload = []
            for diag in diags:
                payload.append(_diagnostic_payload(diag, index_for(diag.loc.file_id)))
            self._notify(
                "textDocument/publishDiagnostics",
                {"uri": path_to_uri(file_id), "diagnostics": payload},
            )
        metrics = result.metrics.to_dict()
        metrics["package"] = result.package_root
        metrics["ok"] = result.ok
        self._notify(METRICS_METHOD, metrics)


def _diagnostic_payload(diag: Diagnostic, line_index: Optional[LineIndex]) -> dict:
    if line_index is not None:
        start = line_index.to_position(diag.loc.start)
        end = line_index.to_position(diag.loc.end)
    else:
        start = end = (0, 0)
    return {
        "range": {
            "start": {"line": start[0], "character": start[1]},
            "end": {"line": end[0], "character": end[1]},
        },
        "severity": _SEVERITIES.get(diag.severity, 1),
        "code": diag.code,
        "source": "minimove",
        "message": diag.message,
    }


def _snake(method: str) -> str:
    out = []
    for ch in method:
        if ch in "/$":
            out.append("_")
        elif ch.isupper():
            out.append("_")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


def serve(stdin: BinaryIO, stdout: BinaryIO, log_path: Optional[str] = None) -> int:
    return Server(stdin, stdout, log_path).run()


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="minimove-server")
    parser.add_argument(
        "--stdio", action="store_true", default=True, help="serve over stdio (default)"
    )
    parser.add_argument("--log", metavar="PATH", default=None, help="append a debug log")
    args = parser.parse_args(argv)
    return serve(sys.stdin.buffer, sys.stdout.buffer, args.log)


if __name__ == "__main__":
    sys.exit(main())
