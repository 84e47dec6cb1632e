import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from vidprompt import (
    BinaryMask,
    ContractViolation,
    EmptyDatasetError,
    EmptyObjectError,
    build_instruct_record,
    ingest_annotations,
    sample_frames,
    summarize_stats,
    validate_dataset,
)
from vidprompt.dataset import assemble_dataset, load_qa_sidecar
from vidprompt.pngio import write_mask
from synthetic import make_blob_mask


def write_fixture(root: Path, videos: int = 2, objects: int = 2,
                  frames: int = 4, with_qa: bool = True,
                  empty_frames: dict | None = None) -> Path:
    """Mask tree <root>/<video>/<object>/<frame>.png plus qa.json sidecars."""
    empty_frames = empty_frames or {}
    for v in range(videos):
        for o in range(objects):
            key = (f"vid{v}", f"obj{o}")
            for f in range(frames):
                if f in empty_frames.get(key, ()):  # deliberately empty mask
                    mask = BinaryMask(np.zeros((48, 48), dtype=bool))
                else:
                    mask = make_blob_mask(v * 100 + o * 10 + f, 48, 48)
                write_mask(mask, root / key[0] / key[1] / f"{f:05d}.png")
            if with_qa:
                qa = [{"question": f"what does object {o} do over time?",
                       "answer": f"it keeps moving around the scene in video {v}"}]
                qa_path = root / key[0] / key[1] / "qa.json"
                qa_path.write_text(json.dumps(qa), encoding="utf-8")
    return root


class TestIngest:
    def test_structure(self, tmp_path):
        write_fixture(tmp_path, videos=2, objects=2)
        groups, diags = ingest_annotations(tmp_path)
        assert len(groups) == 4
        assert {(g.video_id, g.object_id) for g in groups} == {
            ("vid0", "obj0"), ("vid0", "obj1"), ("vid1", "obj0"), ("vid1", "obj1")}
        assert all(g.num_frames == 4 for g in groups)
        assert diags == []

    def test_non_numeric_filename_skipped(self, tmp_path):
        write_fixture(tmp_path, videos=1, objects=1)
        bogus = tmp_path / "vid0" / "obj0" / "thumbnail.png"
        write_mask(make_blob_mask(1, 48, 48), bogus)
        groups, diags = ingest_annotations(tmp_path)
        assert len(groups) == 1
        assert groups[0].num_frames == 4
        assert any("thumbnail" in d for d in diags)

    def test_lazy_masks_load(self, tmp_path):
        write_fixture(tmp_path, videos=1, objects=1)
        groups, _ = ingest_annotations(tmp_path)
        m = groups[0].load_mask(0)
        assert isinstance(m, BinaryMask) and not m.is_empty()

    def test_empty_root(self, tmp_path):
        with pytest.raises(EmptyDatasetError):
            ingest_annotations(tmp_path)
        with pytest.raises(EmptyDatasetError):
            ingest_annotations(tmp_path / "missing")

    def test_frames_sorted_numerically(self, tmp_path):
        obj = tmp_path / "v" / "o"
        for f in (10, 2, 1):
            write_mask(make_blob_mask(f, 32, 32), obj / f"{f}.png")
        groups, _ = ingest_annotations(tmp_path)
        assert groups[0].frame_numbers == [1, 2, 10]


class TestBuildRecord:
    def test_basic_record(self, tmp_path):
        write_fixture(tmp_path, videos=1, objects=1)
        groups, _ = ingest_annotations(tmp_path)
        qa = load_qa_sidecar(tmp_path, "vid0", "obj0")
        out = tmp_path / "out"
        rec = build_instruct_record(groups[0], qa, seed=0, out_dir=out)
        assert rec.sample_id == "vid0__obj0"
        assert 0 <= rec.prompt_frame < rec.num_frames
        assert (out / rec.prompt_layer).is_file()
        assert rec.qa and rec.split == "train"

    def test_single_visible_frame_forced(self, tmp_path):
        key = ("vid0", "obj0")
        write_fixture(tmp_path, videos=1, objects=1, frames=5,
                      empty_frames={key: (0, 1, 3, 4)})
        groups, _ = ingest_annotations(tmp_path)
        qa = load_qa_sidecar(tmp_path, *key)
        for seed in range(10):
            rec = build_instruct_record(groups[0], qa, seed=seed,
                                        out_dir=tmp_path / f"o{seed}")
            assert rec.prompt_frame == 2  # only non-empty frame

    def test_all_empty_object(self, tmp_path):
        key = ("vid0", "obj0")
        write_fixture(tmp_path, videos=1, objects=1, frames=3,
                      empty_frames={key: (0, 1, 2)})
        groups, _ = ingest_annotations(tmp_path)
        with pytest.raises(EmptyObjectError):
            build_instruct_record(groups[0], [{"question": "q", "answer": "a"}],
                                  seed=0, out_dir=tmp_path / "out")

    def test_deterministic_bytes(self, tmp_path):
        write_fixture(tmp_path, videos=1, objects=1)
        groups, _ = ingest_annotations(tmp_path)
        qa = load_qa_sidecar(tmp_path, "vid0", "obj0")
        rec1 = build_instruct_record(groups[0], qa, seed=7, out_dir=tmp_path / "a")
        rec2 = build_instruct_record(groups[0], qa, seed=7, out_dir=tmp_path / "b")
        assert rec1.to_json_obj() == {**rec2.to_json_obj()}
        b1 = (tmp_path / "a" / rec1.prompt_layer).read_bytes()
        b2 = (tmp_path / "b" / rec2.prompt_layer).read_bytes()
        assert b1 == b2

    def test_prompt_frame_choice_uniform(self):
        # 1,000 seeded choices over a 10-frame always-visible object: the
        # chosen-frame histogram must stay inside a generous binomial band
        from vidprompt.dataset import choose_prompt_plan
        counts = Counter()
        for seed in range(1000):
            frame, _, _ = choose_prompt_plan(list(range(10)), "vid0", "obj0",
                                             seed)
            counts[frame] += 1
        # Binomial(1000, 0.1): mean 100, sigma ~9.5; +-4.4 sigma
        for k in range(10):
            assert 58 <= counts[k] <= 142, (k, counts[k])

    def test_empty_qa_rejected(self, tmp_path):
        write_fixture(tmp_path, videos=1, objects=1)
        groups, _ = ingest_annotations(tmp_path)
        with pytest.raises(ContractViolation):
            build_instruct_record(groups[0], [], seed=0, out_dir=tmp_path / "out")


class TestAssembleValidate:
    def test_round_trip_no_violations(self, tmp_path):
        root = write_fixture(tmp_path / "masks", videos=2, objects=2)
        out = tmp_path / "ds" / "data.jsonl"
        n, diags = assemble_dataset(root, root, "train", 0, out)
        assert n == 4
        report, violations = validate_dataset(out)
        assert violations == []
        assert report.videos == 2 and report.objects == 4 and report.qa_pairs == 4

    def test_byte_identical_reruns(self, tmp_path):
        root = write_fixture(tmp_path / "masks", videos=2, objects=2)
        out1 = tmp_path / "d1" / "data.jsonl"
        out2 = tmp_path / "d2" / "data.jsonl"
        assemble_dataset(root, root, "train", 0, out1)
        assemble_dataset(root, root, "train", 0, out2)
        assert out1.read_bytes() == out2.read_bytes()
        a1 = sorted((out1.parent / "prompts").glob("*.png"))
        a2 = sorted((out2.parent / "prompts").glob("*.png"))
        assert [p.name for p in a1] == [p.name for p in a2]
        for p1, p2 in zip(a1, a2):
            assert p1.read_bytes() == p2.read_bytes()

    def test_validator_catches_violations(self, tmp_path):
        root = write_fixture(tmp_path / "masks", videos=1, objects=1)
        out = tmp_path / "ds" / "data.jsonl"
        assemble_dataset(root, root, "test", 0, out)
        good = json.loads(out.read_text().splitlines()[0])
        bad_lines = [
            "this is not json",
            json.dumps({**good, "sample_id": "dup", "prompt_frame": 99}),
            json.dumps({**good, "sample_id": "dup"}),
            json.dumps({**good, "sample_id": "multi", "prompt_frame": [0, 1]}),
            json.dumps({**good, "sample_id": "nokind", "prompt_kind": "circle"}),
            json.dumps({**good, "sample_id": "noqa", "qa": []}),
            json.dumps({**good, "sample_id": "ghost",
                        "prompt_layer": "prompts/missing.png"}),
        ]
        out.write_text("\n".join([json.dumps(good)] + bad_lines) + "\n",
                       encoding="utf-8")
        _, violations = validate_dataset(out)
        text = "\n".join(violations)
        assert "invalid JSON" in text
        assert "duplicate sample_id" in text
        assert "outside" in text
        assert "must be int" in text
        assert "prompt_kind" in text
        assert "qa" in text
        assert "not found" in text

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.jsonl"
        f.write_text("", encoding="utf-8")
        report, violations = validate_dataset(f)
        assert report.videos == 0 and report.qa_pairs == 0
        assert any("empty dataset" in v for v in violations)


class TestStats:
    def test_single_record_means(self, tmp_path):
        root = write_fixture(tmp_path / "m", videos=1, objects=1)
        out = tmp_path / "ds" / "data.jsonl"
        assemble_dataset(root, root, "train", 0, out)
        rec = json.loads(out.read_text().splitlines()[0])
        rec["qa"] = [{"question": "one two three four five",
                      "answer": "a b c d e f"}]
        out.write_text(json.dumps(rec) + "\n", encoding="utf-8")
        report = summarize_stats(out)
        assert report.mean_question_words == 5.0
        assert report.mean_answer_words == 6.0
        assert report.mean_frames == 4.0

    def test_mean_of_two(self, tmp_path):
        root = write_fixture(tmp_path / "m", videos=2, objects=1)
        out = tmp_path / "ds" / "data.jsonl"
        assemble_dataset(root, root, "train", 0, out)
        recs = [json.loads(l) for l in out.read_text().splitlines()]
        recs[0]["qa"] = [{"question": "one two three four", "answer": "x"}]
        recs[1]["qa"] = [{"question": "one two three four five six",
                          "answer": "y"}]
        out.write_text("\n".join(json.dumps(r) for r in recs) + "\n",
                       encoding="utf-8")
        report = summarize_stats(out)
        assert report.mean_question_words == 5.0
        assert report.question_word_histogram == {4: 1, 6: 1}


class TestSampleFrames:
    def test_identity(self):
        assert sample_frames(16, 16) == list(range(16))

    def test_downsample_32_to_16(self):
        assert sample_frames(32, 16) == list(range(1, 32, 2))

    def test_upsample_with_repeats(self):
        got = sample_frames(8, 16)
        assert got == [v for v in range(8) for _ in range(2)]

    def test_formula_general(self):
        for total in (1, 3, 7, 16, 100):
            for n in (1, 4, 16, 33):
                got = sample_frames(total, n)
                want = [int(np.floor((k + 0.5) * total / n)) for k in range(n)]
                assert got == want
                assert all(0 <= v < total for v in got)

    def test_contracts(self):
        with pytest.raises(ContractViolation):
            sample_frames(0, 4)
        with pytest.raises(ContractViolation):
            sample_frames(4, 0)
