"""Experiment configuration and report plumbing."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..problem import ConfigError

KINDS = ("solve", "verify", "gamma-sweep", "vl-sign", "box-sweep", "fiber-scan")


@dataclass
class ExperimentConfig:
    kind: str
    problem_path: str
    out_dir: str = "choquard_out"
    seed: int = 0
    workers: int = 1
    tolerance_scale: float = 1.0
    multistarts: int = 4
    max_iters: int = 2000
    eps_list: list[float] = field(default_factory=lambda: [0.5, 0.25, 0.1, 0.05, 0.0])
    box_list: list[float] = field(default_factory=lambda: [8.0, 16.0, 32.0])

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind '{self.kind}'")
        if not Path(self.problem_path).is_file():
            raise ConfigError(f"problem config not found: {self.problem_path}")
        if not self.eps_list:
            raise ConfigError("sweep list of amplitudes is empty")
        if not self.box_list:
            raise ConfigError("sweep list of box sizes is empty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        env = os.environ.get("CHOQUARD_GS_THREADS")
        if env:
            try:
                self.workers = max(1, int(env))
            except ValueError as exc:
                raise ConfigError(f"CHOQUARD_GS_THREADS={env!r} is not an integer") from exc


def blob_hash(data: bytes) -> str:
    """Content hash in git object style."""
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


class Report:
    """Accumulates a markdown-style report, pass/fail checks, and CSV metrics."""

    def __init__(self, title: str):
        self.title = title
        self.lines: list[str] = [f"# {title}", ""]
        self.checks: list[tuple[str, bool, str]] = []
        self.metrics_rows: list[dict] = []

    def section(self, name: str) -> None:
        self.lines += ["", f"## {name}", ""]

    def add_line(self, text: str) -> None:
        self.lines.append(text)

    def add_check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))
        mark = "PASS" if ok else "FAIL"
        self.lines.append(f"- [{mark}] {name}" + (f" -- {detail}" if detail else ""))
        print(f"[{mark}] {name}" + (f": {detail}" if detail else ""))

    def add_metric(self, **row) -> None:
        self.metrics_rows.append(row)

    @property
    def all_passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def embed_inputs(self, config_text: str, extra: dict | None = None) -> None:
        self.section("Resolved inputs")
        self.lines.append(f"content hash: `{blob_hash(config_text.encode())}`")
        if extra:
            for key, val in sorted(extra.items()):
                self.lines.append(f"- {key}: {val}")
        self.lines += ["", "```ini", config_text.rstrip("\n"), "```"]

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        summary = "all checks passed" if self.all_passed else "FAILURES present"
        body = "\n".join(self.lines + ["", f"**Summary: {summary}** "
                                           f"({sum(ok for _, ok, _ in self.checks)}/{len(self.checks)})", ""])
        (out / "report.md").write_text(body, encoding="utf-8")
        if self.metrics_rows:
            keys: list[str] = []
            for row in self.metrics_rows:
                for k in row:
                    if k not in keys:
                        keys.append(k)

            def cell(v):
                if isinstance(v, (int, np.integer)):
                    return str(int(v))
                if isinstance(v, (float, np.floating)):
                    return repr(float(v))
                return str(v)

            lines = [",".join(keys)]
            for row in self.metrics_rows:
                lines.append(",".join(cell(row.get(k, "")) for k in keys))
            (out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        return out / "report.md"
