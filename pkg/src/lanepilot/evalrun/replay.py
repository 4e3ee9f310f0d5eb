"""Run-log serialization and tamper-evident digests.

A run log is JSONL: one record per tick, then a summary record carrying the
metadata, interventions, report, and a digest over everything else. Floats
serialize via Python's shortest round-trip repr, so the digest is stable
across platforms.
"""

import hashlib
import json

from .metrics import InterventionRecord
from .episode import RunLog


def _canon(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _summary_record(log: RunLog) -> dict:
    return {
        "kind": "summary",
        "scenario": log.scenario_name,
        "seed": log.seed,
        "mode": log.mode,
        "elapsed_s": log.elapsed_s,
        "distance_m": log.distance_m,
        "collisions": log.collisions,
        "ended_early": log.ended_early,
        "interventions": [i.to_dict() for i in log.interventions],
        "report": log.report().to_dict(),
    }


def replay_hash(log: RunLog) -> str:
    """64-bit hex digest of the canonical serialization (digest field excluded)."""
    h = hashlib.blake2b(digest_size=8)
    for tick in log.ticks:
        h.update(_canon(tick).encode())
        h.update(b"\n")
    h.update(_canon(_summary_record(log)).encode())
    return h.hexdigest()


def save_log(log: RunLog, path) -> str:
    digest = replay_hash(log)
    with open(path, "w") as f:
        for tick in log.ticks:
            f.write(_canon(tick) + "\n")
        summary = _summary_record(log)
        summary["digest"] = digest
        f.write(_canon(summary) + "\n")
    return digest


def load_log(path) -> tuple[RunLog, str | None]:
    """(log, stored digest). Raises on structural problems."""
    ticks = []
    summary = None
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("kind") == "tick":
                ticks.append(rec)
            elif rec.get("kind") == "summary":
                summary = rec
            else:
                raise ValueError(f"unknown record kind {rec.get('kind')!r}")
    if summary is None:
        raise ValueError(f"{path}: no summary record")
    log = RunLog(
        scenario_name=summary["scenario"],
        seed=summary["seed"],
        mode=summary["mode"],
        ticks=ticks,
        interventions=[InterventionRecord(**i) for i in summary["interventions"]],
        elapsed_s=summary["elapsed_s"],
        distance_m=summary["distance_m"],
        collisions=summary["collisions"],
        ended_early=summary.get("ended_early"),
    )
    return log, summary.get("digest")


def verify_log(path) -> bool:
    """True when the stored digest matches a recomputation from the records."""
    log, stored = load_log(path)
    return stored is not None and replay_hash(log) == stored
