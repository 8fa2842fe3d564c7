"""Serialization: channel files, trial files, experiment configs, reports.

All documents are JSON (reports, configs, channels) or JSON Lines (trial
files).  Every writer emits keys in sorted order with compact separators, so
identical inputs produce byte-identical files.

Trial file layout: a header object on the first line, then one record per
line::

    {"format_version":1,"kind":"twirlkit-trials","master_seed":7,...}
    {"c":[3,17],"in":"zero","out":"01","ref":false,"t":0}

``out`` is the outcome bit string for the standard protocol (character j is
qubit j) or a +-1 integer for the ensemble protocol; ensemble records carry
the permutation ``pi`` and input form ``{"zw": w'}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .channels import KrausChannel, PauliChannel, engineered_channel
from .protocol import SpamModel, TrialSet

FORMAT_VERSION = 1
TRIALS_KIND = "twirlkit-trials"
REPORT_KIND = "twirlkit-report"


class DataFormatError(ValueError):
    """File contents do not match the documented schema."""


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _check_version(doc: dict, what: str) -> None:
    v = doc.get("format_version")
    if v != FORMAT_VERSION:
        raise DataFormatError(f"{what}: format_version {v!r} not supported (need {FORMAT_VERSION})")


# ---------------------------------------------------------------------------
# channels


def channel_to_doc(ch: PauliChannel | KrausChannel) -> dict:
    if isinstance(ch, PauliChannel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "pauli",
            "n": ch.n,
            "terms": [
                {"pauli": text, "prob": prob}
                for text, prob in sorted(ch.items_as_strings().items())
            ],
        }
    return {
        "format_version": FORMAT_VERSION,
        "kind": "kraus",
        "n": ch.n,
        "operators": [
            [[[float(v.real), float(v.imag)] for v in row] for row in op]
            for op in ch.operators
        ],
    }


def channel_from_doc(doc: dict) -> PauliChannel | KrausChannel:
    _check_version(doc, "channel")
    kind = doc.get("kind")
    if kind == "pauli":
        terms = {item["pauli"]: float(item["prob"]) for item in doc["terms"]}
        ch = PauliChannel.from_strings(terms)
        if ch.n != doc["n"]:
            raise DataFormatError("channel: term length does not match n")
        return ch
    if kind == "kraus":
        ops = tuple(
            np.array([[complex(re, im) for re, im in row] for row in op])
            for op in doc["operators"]
        )
        return KrausChannel(doc["n"], ops)
    if kind == "fixture":
        ch = engineered_channel(doc["fixture_id"])
        if "n" in doc and ch.n != doc["n"]:
            raise DataFormatError("channel: fixture n mismatch")
        return ch
    raise DataFormatError(f"channel: unknown kind {kind!r}")


def save_channel(path: str | Path, ch: PauliChannel | KrausChannel) -> None:
    Path(path).write_text(_dumps(channel_to_doc(ch)) + "\n")


def load_channel(path: str | Path) -> PauliChannel | KrausChannel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"channel file {path}: {exc}") from exc
    return channel_from_doc(doc)


# ---------------------------------------------------------------------------
# trial files


def _spam_doc(spam: SpamModel | None) -> list | None:
    if spam is None:
        return None
    return [list(map(float, spam.prep)), list(map(float, spam.meas))]


def _spam_from_doc(doc) -> SpamModel | None:
    if doc is None:
        return None
    return SpamModel(np.array(doc[0]), np.array(doc[1]))


def write_trials(path: str | Path, sets: TrialSet | list[TrialSet]) -> None:
    """Write one or more trial sets (same run) as header + one line per record."""
    sets = [sets] if isinstance(sets, TrialSet) else list(sets)
    if not sets:
        raise ValueError("nothing to write")
    first = sets[0]
    header = {
        "format_version": FORMAT_VERSION,
        "kind": TRIALS_KIND,
        "n": first.n,
        "variant": first.variant,
        "trials": int(sum(s.trials for s in sets)),
        "master_seed": int(first.master_seed),
        "is_reference": bool(first.is_reference),
        "spam": _spam_doc(first.spam_model),
    }
    lines = [_dumps(header)]
    for s in sets:
        if (s.n, s.variant, s.is_reference) != (first.n, first.variant, first.is_reference):
            raise ValueError("trial sets in one file must share n/variant/reference flag")
        for rec in s.records():
            doc: dict[str, Any] = {
                "t": rec.trial_index,
                "c": list(rec.clifford_ids),
                "ref": rec.is_reference,
            }
            if s.variant == "standard":
                doc["in"] = "zero"
                doc["out"] = rec.outcome
            else:
                doc["in"] = {"zw": rec.input_kind[1]}
                doc["out"] = rec.outcome
                doc["pi"] = list(rec.permutation.mapping)
            lines.append(_dumps(doc))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trials(path: str | Path) -> tuple[dict, list[TrialSet]]:
    """Parse a trial file back into column-oriented sets (one per input kind)."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise DataFormatError(f"{path}: empty trial file")
    try:
        header = json.loads(text[0])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: bad header: {exc}") from exc
    if header.get("kind") != TRIALS_KIND:
        raise DataFormatError(f"{path}: not a trial file")
    _check_version(header, str(path))
    n = header["n"]
    variant = header["variant"]
    spam = _spam_from_doc(header.get("spam"))

    groups: dict[int | None, list[dict]] = {}
    for line in text[1:]:
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: bad record: {exc}") from exc
        key = None if rec["in"] == "zero" else int(rec["in"]["zw"])
        groups.setdefault(key, []).append(rec)

    sets = []
    for key, recs in sorted(groups.items(), key=lambda kv: (kv[0] is not None, kv[0])):
        k = len(recs)
        ids = np.zeros((k, n), dtype=np.uint8)
        indices = np.zeros(k, dtype=np.uint64)
        if variant == "standard":
            if key is not None:
                raise DataFormatError(f"{path}: ensemble record in standard file")
            outcomes = np.zeros((k, n), dtype=np.uint8)
            for i, rec in enumerate(recs):
                indices[i] = rec["t"]
                ids[i] = rec["c"]
                bits = rec["out"]
                if len(bits) != n:
                    raise DataFormatError(f"{path}: outcome length != n")
                outcomes[i] = [1 if ch == "1" else 0 for ch in bits]
            sets.append(
                TrialSet(
                    n=n, variant="standard", master_seed=header["master_seed"],
                    trial_indices=indices, clifford_ids=ids, outcomes=outcomes,
                    is_reference=header.get("is_reference", False), spam_model=spam,
                )
            )
        else:
            if key is None:
                raise DataFormatError(f"{path}: standard record in ensemble file")
            outcomes = np.zeros(k, dtype=np.int8)
            perms = np.zeros((k, n), dtype=np.int64)
            for i, rec in enumerate(recs):
                indices[i] = rec["t"]
                ids[i] = rec["c"]
                outcomes[i] = rec["out"]
                perms[i] = rec["pi"]
            sets.append(
                TrialSet(
                    n=n, variant="ensemble", master_seed=header["master_seed"],
                    trial_indices=indices, clifford_ids=ids, outcomes=outcomes,
                    permutations=perms, z_weight=key,
                    is_reference=header.get("is_reference", False), spam_model=spam,
                )
            )
    return header, sets


# ---------------------------------------------------------------------------
# experiment configs


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    channel: PauliChannel | KrausChannel
    variant: str
    trials: int
    master_seed: int
    spam_model: SpamModel | None
    output: str
    delta: float | None = None
    epsilon: float | None = None


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"config {path}: {exc}") from exc
    _check_version(doc, f"config {path}")
    spec = doc["channel"]
    if isinstance(spec, dict) and "file" in spec:
        base = Path(path).parent / spec["file"]
        channel = load_channel(base)
    else:
        channel = channel_from_doc(spec)
    spam = None
    if doc.get("spam") is not None:
        n = doc["n"]
        prep, meas = doc["spam"].get("prep", 0.0), doc["spam"].get("meas", 0.0)
        prep = np.full(n, prep) if np.isscalar(prep) else np.asarray(prep, dtype=float)
        meas = np.full(n, meas) if np.isscalar(meas) else np.asarray(meas, dtype=float)
        spam = SpamModel(prep, meas)
    cfg = ExperimentConfig(
        n=int(doc["n"]),
        channel=channel,
        variant=doc.get("variant", "standard"),
        trials=int(doc["trials"]),
        master_seed=int(doc["master_seed"]),
        spam_model=spam,
        output=doc["output"],
        delta=doc.get("delta"),
        epsilon=doc.get("epsilon"),
    )
    if cfg.channel.n != cfg.n:
        raise DataFormatError(f"config {path}: channel has n={cfg.channel.n}, config says {cfg.n}")
    if cfg.variant not in ("standard", "ensemble"):
        raise DataFormatError(f"config {path}: unknown variant {cfg.variant!r}")
    if cfg.trials < 1:
        raise DataFormatError(f"config {path}: trials must be >= 1")
    return cfg


# ---------------------------------------------------------------------------
# reports


def write_report(path: str | Path, report: dict) -> None:
    doc = dict(report)
    doc.setdefault("format_version", FORMAT_VERSION)
    doc.setdefault("kind", REPORT_KIND)
    Path(path).write_text(_dumps(doc) + "\n")


def read_report(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"report {path}: {exc}") from exc
    if doc.get("kind") != REPORT_KIND:
        raise DataFormatError(f"{path}: not a report file")
    _check_version(doc, str(path))
    return doc
