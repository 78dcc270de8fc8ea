import json

import pytest

from imgembed import (
    ExportManifest,
    load_manifest,
    manifest_from_root,
    scan_corpus,
    split_count,
)


def make_manifest(tmp_path, **overrides):
    kwargs = dict(
        dataset_root=str(tmp_path),
        class_to_id={"a": 0, "b": 1},
        output_dir=str(tmp_path / "out"),
    )
    kwargs.update(overrides)
    return ExportManifest(**kwargs)


class TestManifestValidation:
    def test_accepts_defaults(self, tmp_path):
        m = make_manifest(tmp_path)
        assert m.support_fraction == 0.5
        assert m.batch_size == 16
        assert m.image_size == 224

    def test_rejects_sparse_ids(self, tmp_path):
        with pytest.raises(ValueError, match="dense"):
            make_manifest(tmp_path, class_to_id={"a": 0, "b": 2})

    def test_rejects_ids_not_from_zero(self, tmp_path):
        with pytest.raises(ValueError, match="dense"):
            make_manifest(tmp_path, class_to_id={"a": 1, "b": 2})

    def test_rejects_duplicate_ids(self, tmp_path):
        with pytest.raises(ValueError, match="dense"):
            make_manifest(tmp_path, class_to_id={"a": 0, "b": 0})

    def test_rejects_empty_class_map(self, tmp_path):
        with pytest.raises(ValueError):
            make_manifest(tmp_path, class_to_id={})

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_fraction_outside_open_interval(self, tmp_path, fraction):
        with pytest.raises(ValueError, match="fraction"):
            make_manifest(tmp_path, support_fraction=fraction)

    def test_rejects_unknown_base_class(self, tmp_path):
        with pytest.raises(ValueError, match="base"):
            make_manifest(tmp_path, base_classes=("a", "zzz"))

    def test_rejects_empty_base_tuple(self, tmp_path):
        with pytest.raises(ValueError, match="base"):
            make_manifest(tmp_path, base_classes=())

    @pytest.mark.parametrize("field,value", [("batch_size", 0), ("image_size", 0)])
    def test_rejects_nonpositive_sizes(self, tmp_path, field, value):
        with pytest.raises(ValueError):
            make_manifest(tmp_path, **{field: value})

    def test_effective_base_defaults_to_all_sorted(self, tmp_path):
        m = make_manifest(tmp_path, class_to_id={"b": 1, "a": 0, "c": 2})
        assert m.effective_base_classes() == ("a", "b", "c")

    def test_effective_base_respects_declaration(self, tmp_path):
        m = make_manifest(
            tmp_path,
            class_to_id={"a": 0, "b": 1, "c": 2},
            base_classes=("c", "a"),
        )
        assert m.effective_base_classes() == ("a", "c")


class TestManifestIO:
    def test_from_root_assigns_sorted_dense_ids(self, corpus_root, tmp_path):
        m = manifest_from_root(str(corpus_root), str(tmp_path / "out"))
        assert m.class_to_id == {f"class{i}": i for i in range(5)}

    def test_from_root_rejects_empty_root(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(ValueError):
            manifest_from_root(str(tmp_path / "empty"), str(tmp_path / "out"))

    def test_load_manifest_round_trip(self, tmp_path, corpus_root):
        path = tmp_path / "manifest.json"
        payload = {
            "dataset_root": str(corpus_root),
            "class_to_id": {"class0": 0, "class1": 1},
            "output_dir": str(tmp_path / "out"),
            "base_classes": ["class0"],
            "support_fraction": 0.25,
            "batch_size": 4,
            "image_size": 64,
        }
        path.write_text(json.dumps(payload))
        m = load_manifest(str(path))
        assert m.class_to_id == {"class0": 0, "class1": 1}
        assert m.base_classes == ("class0",)
        assert m.support_fraction == 0.25
        assert m.batch_size == 4
        assert m.image_size == 64


class TestScanCorpus:
    def test_records_sorted_by_class_then_filename(self, corpus_root):
        records = scan_corpus(str(corpus_root), {f"class{i}": i for i in range(5)})
        assert len(records) == 20
        keys = [(r[1], r[0].name) for r in records]
        assert keys == sorted(keys)
        assert all(label == int(name[-1]) for _, name, label in records)

    def test_missing_class_dir_raises(self, corpus_root):
        mapping = {f"class{i}": i for i in range(5)}
        mapping["ghost"] = 5
        with pytest.raises(ValueError, match="ghost"):
            scan_corpus(str(corpus_root), mapping)

    def test_empty_class_dir_raises(self, tmp_path):
        (tmp_path / "a").mkdir()
        with pytest.raises(ValueError, match="no image"):
            scan_corpus(str(tmp_path), {"a": 0})

    def test_extra_dirs_ignored(self, corpus_root):
        records = scan_corpus(str(corpus_root), {"class0": 0})
        assert len(records) == 4
        assert {r[1] for r in records} == {"class0"}


class TestSplitCount:
    @pytest.mark.parametrize(
        "total,fraction,expected",
        [
            (2, 0.5, 1),
            (5, 0.5, 3),
            (4, 0.5, 2),
            (1, 0.5, 1),
            (3, 0.25, 1),
            (10, 0.3, 3),
            (1, 0.01, 0),  # a tiny fraction can still empty a small class
        ],
    )
    def test_rounds_half_up(self, total, fraction, expected):
        assert split_count(total, fraction) == expected

    def test_single_image_class_in_support_at_default_fraction(self):
        # At fraction >= 0.5, round-half-up keeps one-image base classes
        # represented in the support file.
        for fraction in (0.5, 0.6, 0.99):
            assert split_count(1, fraction) == 1
