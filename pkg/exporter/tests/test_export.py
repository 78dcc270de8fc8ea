import json
from collections import Counter

import numpy as np
import pytest
import torch

from protostream import read_feature_file
from protostream.cli import main as protostream_main

from imgembed import (
    ExportManifest,
    FeatureExtractor,
    MissingCheckpoint,
    export_features,
    load_image,
    load_module,
)
from imgembed.cli import main as imgembed_main

from conftest import make_image

SIZE = dict(batch_size=4, image_size=32)


def toy_manifest(corpus_root, out_dir, checkpoint_path, **overrides):
    kwargs = dict(
        dataset_root=str(corpus_root),
        class_to_id={f"class{i}": i for i in range(5)},
        output_dir=str(out_dir),
        checkpoint=str(checkpoint_path),
        **SIZE,
    )
    kwargs.update(overrides)
    return ExportManifest(**kwargs)


class TestModelLoading:
    def test_local_checkpoint_loads_in_eval_mode(self, checkpoint_path):
        module = load_module(str(checkpoint_path))
        assert not module.training

    def test_missing_local_path(self, tmp_path):
        with pytest.raises(MissingCheckpoint, match="no such checkpoint"):
            load_module(str(tmp_path / "ghost.pt"))

    def test_non_torchscript_file(self, tmp_path):
        junk = tmp_path / "junk.pt"
        junk.write_bytes(b"not a checkpoint")
        with pytest.raises(MissingCheckpoint):
            load_module(str(junk))

    @pytest.mark.parametrize("bad", ["hub:noentrypoint", "hub:#entry", "hub:repo#"])
    def test_malformed_hub_identifier(self, bad):
        with pytest.raises(MissingCheckpoint, match="hub:<repo>#<entry>"):
            load_module(bad)

    def test_extract_shape_and_dtype(self, checkpoint_path):
        extractor = FeatureExtractor.from_identifiers(str(checkpoint_path))
        batch = torch.zeros(3, 3, 32, 32)
        out = extractor.extract(batch)
        assert isinstance(out, np.ndarray)
        assert out.dtype == np.float32
        assert out.shape == (3, 12)

    def test_extract_rejects_non_matrix_output(self):
        class Cube(torch.nn.Module):
            def forward(self, x):
                return x

        extractor = FeatureExtractor(Cube())
        with pytest.raises(ValueError, match="expected \\(batch, dim\\)"):
            extractor.extract(torch.zeros(2, 3, 8, 8))

    def test_projection_head_applies_after_backbone(self, checkpoint_path, tmp_path):
        torch.manual_seed(1)
        head = torch.jit.script(torch.nn.Linear(12, 6).eval())
        head_path = tmp_path / "head.pt"
        head.save(str(head_path))
        extractor = FeatureExtractor.from_identifiers(
            str(checkpoint_path), str(head_path)
        )
        out = extractor.extract(torch.zeros(2, 3, 32, 32))
        assert out.shape == (2, 6)


@pytest.fixture(scope="module")
def result(corpus_root, checkpoint_path, tmp_path_factory):
    """One all-base export of the 20-image corpus, shared read-only."""
    out = tmp_path_factory.mktemp("export_all_base")
    manifest = toy_manifest(corpus_root, out, checkpoint_path)
    return export_features(manifest)


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("small_corpus")
    for cls in range(2):
        class_dir = root / f"c{cls}"
        class_dir.mkdir()
        for i in range(2):
            make_image(class_dir / f"{i}.png", seed=cls * 7 + i)
    return root


class TestExportRoundTrip:
    def test_support_reads_back_labeled(self, result):
        features, labels = read_feature_file(result.support_path)
        assert features.shape == (10, 12)
        assert features.dtype == np.float32
        assert labels is not None
        # Two support samples per class, every class represented.
        assert Counter(labels.tolist()) == {i: 2 for i in range(5)}

    def test_stream_reads_back_unlabeled(self, result):
        features, labels = read_feature_file(result.stream_path, expected_dim=12)
        assert features.shape == (10, 12)
        assert labels is None

    def test_half_fraction_split_counts(self, result):
        # 5 classes x 4 images, fraction 0.5: 2 to support per class.
        assert result.support_count == 10
        assert result.stream_count == 10
        assert result.skipped == ()

    def test_features_are_raw_not_unit_norm(self, result):
        features, _ = read_feature_file(result.support_path)
        norms = np.linalg.norm(features, axis=1)
        assert np.all(np.isfinite(norms))
        assert np.any(np.abs(norms - 1.0) > 1e-2)

    def test_support_is_sorted_filename_prefix(self, result, corpus_root,
                                               checkpoint_path):
        # Support rows are each class's first files in sorted order, so the
        # embeddings of class0/img{0,1}.png open the file. Recompute them
        # with the export's own batch composition (class0's four images).
        extractor = FeatureExtractor.from_identifiers(str(checkpoint_path))
        batch = torch.stack(
            [
                load_image(corpus_root / "class0" / f"img{i}.png", 32)
                for i in range(4)
            ]
        )
        expected = extractor.extract(batch)
        features, labels = read_feature_file(result.support_path)
        np.testing.assert_allclose(features[:2], expected[:2], rtol=1e-5, atol=1e-6)
        assert labels[0] == labels[1] == 0

    def test_label_map_sidecar(self, result, checkpoint_path):
        payload = json.loads(result.label_map_path.read_text())
        assert payload["classes"] == {f"class{i}": i for i in range(5)}
        assert payload["base_classes"] == [f"class{i}" for i in range(5)]
        assert payload["dim"] == 12
        assert payload["checkpoint"] == str(checkpoint_path)
        assert payload["projection"] is None
        assert payload["support_count"] == 10
        assert payload["stream_count"] == 10
        assert payload["skipped"] == []

    def test_truth_sidecar(self, result):
        payload = json.loads(result.truth_path.read_text())
        assert payload["base_label_set"] == [0, 1, 2, 3, 4]
        assert payload["num_total_labels"] == 5
        # Stream truths follow class order: two held-out images per class.
        assert payload["truths"] == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]


class TestBaseSubsetSplit:
    def test_declared_base_classes_split_only_those(
        self, corpus_root, checkpoint_path, tmp_path
    ):
        manifest = toy_manifest(
            corpus_root,
            tmp_path / "out",
            checkpoint_path,
            base_classes=("class0", "class2", "class4"),
        )
        result = export_features(manifest)
        # 3 base classes x 2 to support; stream gets 3x2 held-out base
        # images plus 2x4 novel-class images.
        assert result.support_count == 6
        assert result.stream_count == 14

        _, labels = read_feature_file(result.support_path)
        assert Counter(labels.tolist()) == {0: 2, 2: 2, 4: 2}

        truth = json.loads(result.truth_path.read_text())
        assert truth["base_label_set"] == [0, 2, 4]
        assert truth["num_total_labels"] == 5
        assert Counter(truth["truths"]) == {0: 2, 2: 2, 4: 2, 1: 4, 3: 4}

    def test_uneven_fraction_rounds_half_up(
        self, corpus_root, checkpoint_path, tmp_path
    ):
        # 4 images at fraction 0.4: floor(1.6 + 0.5) = 2 per class.
        manifest = toy_manifest(
            corpus_root, tmp_path / "out", checkpoint_path, support_fraction=0.4
        )
        result = export_features(manifest)
        assert result.support_count == 10
        assert result.stream_count == 10


class TestDeterminism:
    def test_reexport_is_byte_identical(
        self, small_corpus, checkpoint_path, tmp_path
    ):
        outputs = []
        for run in ("first", "second"):
            manifest = ExportManifest(
                dataset_root=str(small_corpus),
                class_to_id={"c0": 0, "c1": 1},
                output_dir=str(tmp_path / run),
                checkpoint=str(checkpoint_path),
                **SIZE,
            )
            result = export_features(manifest)
            outputs.append(
                {
                    "support": result.support_path.read_bytes(),
                    "stream": result.stream_path.read_bytes(),
                    "label_map": result.label_map_path.read_bytes(),
                    "truth": result.truth_path.read_bytes(),
                }
            )
        assert outputs[0] == outputs[1]


class TestUnreadableImages:
    @pytest.fixture()
    def corpus_with_corrupt(self, tmp_path):
        root = tmp_path / "corrupt_corpus"
        for cls in ("a", "b"):
            class_dir = root / cls
            class_dir.mkdir(parents=True)
            for i in range(3):
                make_image(class_dir / f"{i}.png", seed=ord(cls) + i)
        (root / "a" / "broken.png").write_bytes(b"this is not a png")
        return root

    def test_corrupt_image_skipped_and_recorded(
        self, corpus_with_corrupt, checkpoint_path, tmp_path
    ):
        manifest = ExportManifest(
            dataset_root=str(corpus_with_corrupt),
            class_to_id={"a": 0, "b": 1},
            output_dir=str(tmp_path / "out"),
            checkpoint=str(checkpoint_path),
            **SIZE,
        )
        with pytest.warns(UserWarning, match="unreadable"):
            result = export_features(manifest)
        assert result.skipped == ("a/broken.png",)
        # 3 readable per class: 2 to support, 1 to stream.
        assert result.support_count == 4
        assert result.stream_count == 2
        payload = json.loads(result.label_map_path.read_text())
        assert payload["skipped"] == ["a/broken.png"]

    def test_all_unreadable_is_an_error(self, checkpoint_path, tmp_path):
        root = tmp_path / "hopeless"
        (root / "a").mkdir(parents=True)
        (root / "a" / "0.png").write_bytes(b"junk")
        manifest = ExportManifest(
            dataset_root=str(root),
            class_to_id={"a": 0},
            output_dir=str(tmp_path / "out"),
            checkpoint=str(checkpoint_path),
            **SIZE,
        )
        with pytest.warns(UserWarning):
            with pytest.raises(ValueError, match="no readable images"):
                export_features(manifest)


class TestCli:
    def test_end_to_end(self, corpus_root, checkpoint_path, tmp_path, capsys):
        out = tmp_path / "cli_out"
        rc = imgembed_main(
            [
                "--root", str(corpus_root),
                "--out-dir", str(out),
                "--checkpoint", str(checkpoint_path),
                "--batch-size", "4",
                "--image-size", "32",
            ]
        )
        assert rc == 0
        assert (out / "support.pacf").is_file()
        assert (out / "stream.pacf").is_file()
        assert (out / "label_map.json").is_file()
        assert (out / "truth.json").is_file()
        assert "10 support + 10 stream" in capsys.readouterr().out

    def test_manifest_flag_wins(self, corpus_root, checkpoint_path, tmp_path,
                                capsys):
        out = tmp_path / "via_manifest"
        manifest_path = tmp_path / "manifest.json"
        manifest_path.write_text(
            json.dumps(
                {
                    "dataset_root": str(corpus_root),
                    "class_to_id": {f"class{i}": i for i in range(5)},
                    "output_dir": str(out),
                    "checkpoint": str(checkpoint_path),
                    "base_classes": ["class0", "class1", "class2"],
                    "batch_size": 4,
                    "image_size": 32,
                }
            )
        )
        rc = imgembed_main(["--manifest", str(manifest_path)])
        assert rc == 0
        assert "6 support + 14 stream" in capsys.readouterr().out

    def test_missing_root_is_usage_error(self, capsys):
        rc = imgembed_main(["--out-dir", "/tmp/nowhere"])
        assert rc == 2
        assert "--root" in capsys.readouterr().err

    def test_missing_checkpoint_reports_class(self, corpus_root, tmp_path,
                                              capsys):
        rc = imgembed_main(
            [
                "--root", str(corpus_root),
                "--out-dir", str(tmp_path / "out"),
                "--checkpoint", str(tmp_path / "ghost.pt"),
            ]
        )
        assert rc == 2
        assert "MissingCheckpoint" in capsys.readouterr().err

    def test_bad_fraction_is_reported(self, corpus_root, checkpoint_path,
                                      tmp_path, capsys):
        rc = imgembed_main(
            [
                "--root", str(corpus_root),
                "--out-dir", str(tmp_path / "out"),
                "--checkpoint", str(checkpoint_path),
                "--support-fraction", "1.5",
            ]
        )
        assert rc == 2
        assert "support_fraction" in capsys.readouterr().err


class TestDownstreamPipeline:
    def test_exported_files_drive_the_consumer_cli(
        self, corpus_root, checkpoint_path, tmp_path, capsys
    ):
        manifest = toy_manifest(
            corpus_root,
            tmp_path / "export",
            checkpoint_path,
            base_classes=("class0", "class1", "class2"),
        )
        result = export_features(manifest)

        calib = tmp_path / "calib.json"
        trace = tmp_path / "trace.jsonl"
        report = tmp_path / "eval.json"
        assert protostream_main(
            ["calibrate", "--support", str(result.support_path), "--out", str(calib)]
        ) == 0
        assert protostream_main(
            [
                "stream",
                "--calibration", str(calib),
                "--stream", str(result.stream_path),
                "--out", str(trace),
            ]
        ) == 0
        assert protostream_main(
            [
                "eval",
                "--trace", str(trace),
                "--truth", str(result.truth_path),
                "--out", str(report),
            ]
        ) == 0
        capsys.readouterr()

        lines = trace.read_text().strip().splitlines()
        assert len(lines) == result.stream_count
        payload = json.loads(report.read_text())
        for protocol in ("strict", "greedy"):
            for key in ("all", "old", "new"):
                assert 0.0 <= payload[protocol][key] <= 1.0
