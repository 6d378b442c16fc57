"""LSP test client: drives a language server subprocess over stdio and keeps
the full message log for conformance checks."""

from __future__ import annotations

import subprocess
import threading
import time
from typing import Callable, Optional

from ..rpc import FramingError, MessageWriter, read_message


class ClientError(Exception):
    pass


class ServerCrashed(ClientError):
    pass


class ResponseTimeout(ClientError):
    pass


class LspClient:
    def __init__(
        self,
        cmd: list[str],
        cwd: Optional[str] = None,
        env: Optional[dict] = None,
        stderr=subprocess.DEVNULL,
    ):
        self.cmd = cmd
        self.proc = subprocess.Popen(
            cmd,
            cwd=cwd,
            env=env,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=stderr,
        )
        assert self.proc.stdin is not None and self.proc.stdout is not None
        self._writer = MessageWriter(self.proc.stdin)
        self._cond = threading.Condition()
        self._responses: dict = {}
        self._next_id = 1
        self.notifications: list[dict] = []
        self.log: list[tuple[str, dict]] = []  # ("send"|"recv", message)
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    @property
    def pid(self) -> int:
        return self.proc.pid

    def _read_loop(self) -> None:
        assert self.proc.stdout is not None
        while True:
            try:
                message = read_message(self.proc.stdout)
            except (FramingError, ValueError, OSError):
                break
            if message is None:
                break
            with self._cond:
                self.log.append(("recv", message))
                if "method" in message and "id" not in message:
                    self.notifications.append(message)
                elif "id" in message and "method" not in message:
                    self._responses[message["id"]] = message
                self._cond.notify_all()
        with self._cond:
            self._cond.notify_all()

    def _send(self, message: dict) -> None:
        with self._cond:
            self.log.append(("send", message))
        try:
            self._writer.write(message)
        except (BrokenPipeError, OSError) as exc:
            raise ServerCrashed(f"server pipe closed: {exc}") from exc

    def notify(self, method: str, params: dict) -> None:
        self._send({"jsonrpc": "2.0", "method": method, "params": params})

    def request(self, method: str, params: dict, timeout: float = 30.0):
        with self._cond:
            msg_id = self._next_id
            self._next_id += 1
        self._send({"jsonrpc": "2.0", "id": msg_id, "method": method, "params": params})
        deadline = time.monotonic() + timeout
        with self._cond:
            while msg_id not in self._responses:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ResponseTimeout(f"no response to {method} within {timeout}s")
                if self.proc.poll() is not None:
                    raise ServerCrashed(
                        f"server exited with code {self.proc.returncode} "
                        f"while waiting for {method}"
                    )
                self._cond.wait(min(remaining, 0.25))
            response = self._responses.pop(msg_id)
        if "error" in response:
            raise ClientError(f"{method} failed: {response['error']}")
        return response.get("result")

    def next_notification(
        self,
        index: int,
        method: str,
        predicate: Optional[Callable[[dict], bool]] = None,
        timeout: float = 30.0,
    ) -> tuple[dict, int]:
        """Returns (params, next index) for the first notification at or
        after ``index`` matching method and predicate."""
        deadline = time.monotonic() + timeout
        with self._cond:
            i = index
            while True:
                while i < len(self.notifications):
                    message = self.notifications[i]
                    i += 1
                    if message.get("method") != method:
                        continue
                    params = message.get("params") or {}
                    if predicate is None or predicate(params):
                        return params, i
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ResponseTimeout(
                        f"no {method} notification within {timeout}s"
                    )
                if self.proc.poll() is not None:
                    raise ServerCrashed(
                        f"server exited with code {self.proc.returncode} "
                        f"while waiting for {method}"
                    )
                self._cond.wait(min(remaining, 0.25))

    def drain_notifications(
        self,
        index: int,
        method: str,
        quiet: float = 0.3,
        predicate: Optional[Callable[[dict], bool]] = None,
    ) -> int:
        """Advances past matching notifications until none arrive for
        ``quiet`` seconds; returns the new cursor."""
        cursor = index
        while True:
            try:
                _, cursor = self.next_notification(
                    cursor, method, predicate, timeout=quiet
                )
            except ResponseTimeout:
                return cursor
            except ServerCrashed:
                return cursor

    def close(self, graceful: bool = True, timeout: float = 10.0) -> int:
        if graceful and self.proc.poll() is None:
            try:
                self.request("shutdown", {}, timeout=timeout)
                self.notify("exit", {})
            except ClientError:
                pass
        try:
            self.proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        if self.proc.stdin is not None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        self._reader.join(timeout=2)
        return self.proc.returncode
