"""Human-perceptibility survey tooling.

Builds anonymized survey packets (token-named PNGs plus a JSON manifest)
from successful attack traces, and scores externally collected votes:
11 workers answer altered / not altered / cannot tell per image, the
majority label is compared against ground truth, and human accuracy is
the fraction of correct majority labels. Abstentions never win and a
tie yields NO_MAJORITY, which counts as incorrect.
"""

from __future__ import annotations

import csv
import json
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from advface.attacks import SUCCESS
from advface.imageops import save_image

ALTERED = "ALTERED"
NOT_ALTERED = "NOT_ALTERED"
CANNOT_TELL = "CANNOT_TELL"
NO_MAJORITY = "NO_MAJORITY"

ANSWERS = (ALTERED, NOT_ALTERED, CANNOT_TELL)


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str  # opaque random token
    attack: str | None  # None for unaltered images
    epsilon_255: float | None
    altered: bool
    source_trace: str


@dataclass
class SurveyManifest:
    entries: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {"entries": [entry.__dict__ for entry in self.entries]}, indent=2
        )

    @classmethod
    def from_json(cls, text: str) -> "SurveyManifest":
        data = json.loads(text)
        return cls(entries=[ManifestEntry(**e) for e in data["entries"]])


@dataclass(frozen=True)
class VoteRecord:
    image_id: str
    worker_id: str
    answer: str

    def __post_init__(self):
        if self.answer not in ANSWERS:
            raise ValueError(f"invalid answer {self.answer!r}")


@dataclass(frozen=True)
class MajorityLabel:
    image_id: str
    label: str  # ALTERED | NOT_ALTERED | NO_MAJORITY
    vote_counts: dict


def _token(rng: np.random.Generator) -> str:
    return bytes(rng.integers(0, 256, size=8, dtype=np.uint8)).hex()


def build_packet(traces, originals, n: int, seed: int, out_dir,
                 calibration=None) -> SurveyManifest:
    """Sample n successful attacks, write altered images and their unaltered
    counterparts under random token filenames, shuffled.

    ``originals[i]`` is the unaltered target of ``traces[i]``. The
    calibration exemplar pair (shown to workers before the survey) is
    written under ``calibration/``; pass (orig, attacked) explicitly or
    the highest-magnitude trace is used.
    """
    traces = list(traces)
    if any(t.outcome != SUCCESS for t in traces):
        raise ValueError("survey packets are built from successful traces only")
    attacks = {t.attack for t in traces}
    if len(attacks) > 1:
        raise ValueError("packet must cover a single attack")
    if len(traces) < n:
        raise ValueError(f"need {n} successful traces, have {len(traces)}")
    if len(originals) != len(traces):
        raise ValueError("originals must align with traces")

    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    cal_dir = os.path.join(out_dir, "calibration")
    os.makedirs(cal_dir, exist_ok=True)
    if calibration is None and traces:
        idx = int(np.argmax([t.magnitude or 0.0 for t in traces]))
        calibration = (originals[idx], traces[idx].final_image)
    if calibration is not None:
        save_image(calibration[0], os.path.join(cal_dir, "unaltered.png"))
        save_image(calibration[1], os.path.join(cal_dir, "attacked.png"))

    chosen = rng.choice(len(traces), size=n, replace=False) if n else []
    entries = []
    for i in chosen:
        t = traces[int(i)]
        entries.append((ManifestEntry(
            image_id=_token(rng), attack=t.attack, epsilon_255=t.epsilon_255,
            altered=True, source_trace=f"trace:{int(i)}"), t.final_image))
        entries.append((ManifestEntry(
            image_id=_token(rng), attack=None, epsilon_255=None,
            altered=False, source_trace=f"original:{int(i)}"), originals[int(i)]))
    rng.shuffle(entries)
    manifest = SurveyManifest()
    for entry, img in entries:
        save_image(img, os.path.join(out_dir, f"{entry.image_id}.png"))
        manifest.entries.append(entry)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(manifest.to_json())
    return manifest


def read_votes_csv(path) -> list[VoteRecord]:
    """Votes as CSV with header image_id,worker_id,answer."""
    votes = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            votes.append(VoteRecord(rec["image_id"], rec["worker_id"],
                                    rec["answer"].strip().upper()))
    return votes


def majority_label(votes) -> MajorityLabel:
    """Strict plurality between ALTERED and NOT_ALTERED; CANNOT_TELL is
    tallied but never wins; ties give NO_MAJORITY."""
    votes = list(votes)
    if not votes:
        raise ValueError("no votes")
    ids = {v.image_id for v in votes}
    if len(ids) != 1:
        raise ValueError(f"votes mix image ids: {sorted(ids)}")
    counts = Counter(v.answer for v in votes)
    tallies = {a: counts.get(a, 0) for a in ANSWERS}
    if tallies[ALTERED] > tallies[NOT_ALTERED]:
        label = ALTERED
    elif tallies[NOT_ALTERED] > tallies[ALTERED]:
        label = NOT_ALTERED
    else:
        label = NO_MAJORITY
    return MajorityLabel(votes[0].image_id, label, tallies)


def human_accuracy(manifest: SurveyManifest, labels) -> float:
    """Fraction of manifest entries whose majority label matches ground
    truth. NO_MAJORITY counts as incorrect."""
    by_id = {lab.image_id: lab for lab in labels}
    if not manifest.entries:
        raise ValueError("empty manifest")
    correct = 0
    for entry in manifest.entries:
        lab = by_id.get(entry.image_id)
        if lab is None:
            raise ValueError(f"no majority label for image {entry.image_id}")
        truth = ALTERED if entry.altered else NOT_ALTERED
        if lab.label == truth:
            correct += 1
    return correct / len(manifest.entries)


def score_votes(manifest: SurveyManifest, votes) -> float:
    """Group raw votes per image, take majority labels, score the manifest."""
    by_image = {}
    for v in votes:
        by_image.setdefault(v.image_id, []).append(v)
    labels = [majority_label(vs) for vs in by_image.values()]
    return human_accuracy(manifest, labels)
