import json
import os

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from advface.attacks import FAILURE, SUCCESS, AttackTrace
from advface.survey import (
    ALTERED,
    CANNOT_TELL,
    NO_MAJORITY,
    NOT_ALTERED,
    MajorityLabel,
    SurveyManifest,
    VoteRecord,
    build_packet,
    human_accuracy,
    majority_label,
    read_votes_csv,
    score_votes,
)


def votes_for(image_id, altered, not_altered, cannot_tell=0):
    out = []
    worker = 0
    for answer, count in ((ALTERED, altered), (NOT_ALTERED, not_altered),
                          (CANNOT_TELL, cannot_tell)):
        for _ in range(count):
            out.append(VoteRecord(image_id, f"w{worker}", answer))
            worker += 1
    return out


def make_success_traces(n, dims=(8, 8, 3), seed=0):
    rng = np.random.default_rng(seed)
    traces, originals = [], []
    for i in range(n):
        orig = rng.uniform(0.1, 0.9, dims)
        adv = np.clip(orig + rng.normal(0, 0.05, dims), 0, 1)
        t = AttackTrace("nes", 20.0, i, steps=[(1, 0.2)], outcome=SUCCESS,
                        queries_used=10)
        t.final_image = adv
        t.magnitude = float(np.linalg.norm((adv - orig).ravel()))
        traces.append(t)
        originals.append(orig)
    return traces, originals


class TestMajorityLabel:
    def test_eleven_worker_plurality(self):
        label = majority_label(votes_for("img", 6, 5))
        assert label.label == ALTERED
        assert label.vote_counts == {ALTERED: 6, NOT_ALTERED: 5, CANNOT_TELL: 0}

    def test_tie_is_no_majority(self):
        assert majority_label(votes_for("img", 4, 4, 3)).label == NO_MAJORITY

    def test_abstention_cannot_win(self):
        assert majority_label(votes_for("img", 0, 0, 11)).label == NO_MAJORITY

    def test_reorder_invariant(self):
        votes = votes_for("img", 5, 3, 3)
        assert majority_label(votes) == majority_label(votes[::-1])

    def test_mixed_image_ids_error(self):
        votes = votes_for("a", 2, 0) + votes_for("b", 2, 0)
        with pytest.raises(ValueError):
            majority_label(votes)

    def test_no_votes_error(self):
        with pytest.raises(ValueError):
            majority_label([])


def manifest_of(labels_truth):
    from advface.survey import ManifestEntry

    entries = [ManifestEntry(f"id{i}", "nes" if altered else None,
                             20.0 if altered else None, altered, f"t{i}")
               for i, (altered, _) in enumerate(labels_truth)]
    return SurveyManifest(entries=entries)


class TestHumanAccuracy:
    def test_all_correct(self):
        spec = [(True, ALTERED), (False, NOT_ALTERED)]
        manifest = manifest_of(spec)
        labels = [MajorityLabel(f"id{i}", lab, {}) for i, (_, lab) in enumerate(spec)]
        assert human_accuracy(manifest, labels) == 1.0

    def test_54_of_100_matches_reported_level(self):
        # 54 correct majority labels out of 100 -> 0.54 exactly
        spec = [(True, ALTERED)] * 54 + [(True, NOT_ALTERED)] * 46
        manifest = manifest_of(spec)
        labels = [MajorityLabel(f"id{i}", lab, {}) for i, (_, lab) in enumerate(spec)]
        assert human_accuracy(manifest, labels) == 0.54

    def test_no_majority_counts_incorrect(self):
        spec = [(True, NO_MAJORITY), (False, NO_MAJORITY)]
        manifest = manifest_of(spec)
        labels = [MajorityLabel(f"id{i}", lab, {}) for i, (_, lab) in enumerate(spec)]
        assert human_accuracy(manifest, labels) == 0.0

    def test_permutation_invariant(self):
        spec = [(True, ALTERED), (False, ALTERED), (True, NOT_ALTERED)]
        manifest = manifest_of(spec)
        labels = [MajorityLabel(f"id{i}", lab, {}) for i, (_, lab) in enumerate(spec)]
        assert human_accuracy(manifest, labels) == \
            human_accuracy(manifest, labels[::-1])

    def test_missing_label_error(self):
        manifest = manifest_of([(True, ALTERED)])
        with pytest.raises(ValueError):
            human_accuracy(manifest, [])


class TestBuildPacket:
    def test_empty_packet_keeps_calibration(self, tmp_path):
        traces, originals = make_success_traces(3)
        manifest = build_packet(traces, originals, 0, 0, tmp_path / "p")
        assert manifest.entries == []
        assert (tmp_path / "p" / "calibration" / "unaltered.png").exists()
        assert (tmp_path / "p" / "calibration" / "attacked.png").exists()

    def test_deterministic_tokens(self, tmp_path):
        traces, originals = make_success_traces(12)
        m1 = build_packet(traces, originals, 5, 42, tmp_path / "a")
        m2 = build_packet(traces, originals, 5, 42, tmp_path / "b")
        assert [e.image_id for e in m1.entries] == [e.image_id for e in m2.entries]
        assert sorted(os.listdir(tmp_path / "a")) == sorted(os.listdir(tmp_path / "b"))

    def test_mix_and_files(self, tmp_path):
        traces, originals = make_success_traces(12)
        manifest = build_packet(traces, originals, 5, 1, tmp_path / "p")
        altered = [e for e in manifest.entries if e.altered]
        unaltered = [e for e in manifest.entries if not e.altered]
        assert len(altered) == 5 and len(unaltered) == 5
        for entry in manifest.entries:
            assert (tmp_path / "p" / f"{entry.image_id}.png").exists()
        # manifest JSON round trip
        loaded = SurveyManifest.from_json(
            (tmp_path / "p" / "manifest.json").read_text())
        assert loaded == manifest

    def test_rejects_failures_and_shortfalls(self, tmp_path):
        traces, originals = make_success_traces(3)
        traces[1].outcome = FAILURE
        with pytest.raises(ValueError):
            build_packet(traces, originals, 1, 0, tmp_path / "p")
        traces, originals = make_success_traces(3)
        with pytest.raises(ValueError):
            build_packet(traces, originals, 5, 0, tmp_path / "p")

    def test_tokens_independent_of_label(self, tmp_path):
        # chi-squared independence of the token's first nibble vs altered flag
        traces, originals = make_success_traces(25)
        nibbles = {True: [0] * 16, False: [0] * 16}
        total = 0
        seed = 0
        while total < 1000:
            manifest = build_packet(traces, originals, 20, seed,
                                    tmp_path / f"p{seed}")
            for entry in manifest.entries:
                nibbles[entry.altered][int(entry.image_id[0], 16)] += 1
                total += 1
            seed += 1
        table = np.array([nibbles[True], nibbles[False]])
        _, p_value, _, _ = chi2_contingency(table)
        assert p_value > 0.001


class TestVotesCsvAndScoring:
    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "votes.csv"
        path.write_text("image_id,worker_id,answer\n"
                        "a,w1,ALTERED\na,w2,not_altered\na,w3,CANNOT_TELL\n")
        votes = read_votes_csv(path)
        assert votes[1].answer == NOT_ALTERED

    def test_invalid_answer(self):
        with pytest.raises(ValueError):
            VoteRecord("a", "w", "MAYBE")

    def test_score_votes_end_to_end(self, tmp_path):
        traces, originals = make_success_traces(4)
        manifest = build_packet(traces, originals, 2, 3, tmp_path / "p")
        votes = []
        for entry in manifest.entries:
            answer = ALTERED if entry.altered else NOT_ALTERED
            votes += votes_for(entry.image_id, *(
                (6, 5) if answer == ALTERED else (5, 6)))
        assert score_votes(manifest, votes) == 1.0
