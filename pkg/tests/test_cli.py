import json

import numpy as np
import pytest

from pcbaoi import (
    BBox,
    ComponentClass,
    Detection,
    RasterImage,
    decode_image,
    encode_image,
    save_detections,
)
from pcbaoi.cli import ClassColorMap, main, parse_config, render_missing
from pcbaoi.matcher import FlaggedDetection
from pcbaoi.raster import PixelCoord

from synthboards import make_board


def det(x, y, w, h, component=ComponentClass.CAPACITOR, conf=0.9):
    return Detection(bbox=BBox(x, y, w, h), component=component, confidence=conf)


def write_board(tmp_path, name, image):
    path = tmp_path / name
    path.write_bytes(encode_image(image, "png"))
    return path


def write_detections(tmp_path, name, dets, dims):
    path = tmp_path / name
    path.write_text(save_detections(dets, dims))
    return path


@pytest.fixture()
def board_setup(tmp_path):
    board, dets = make_board(6, seed=31)
    design = write_board(tmp_path, "design.png", board)
    det_path = write_detections(tmp_path, "dets.json", dets, board.dims)
    return board, dets, design, det_path


class TestInspect:
    def test_identical_images_exit_zero(self, tmp_path, board_setup, capsys):
        board, dets, design, det_path = board_setup
        report_path = tmp_path / "report.json"
        code = main(
            ["inspect", str(design), str(design), str(det_path), "--out", str(report_path)]
        )
        assert code == 0
        doc = json.loads(report_path.read_text())
        assert doc["missing"] == []
        assert doc["total_detections"] == len(dets)

    def test_erased_component_found(self, tmp_path, board_setup):
        board, dets, design, det_path = board_setup
        code = main(
            ["inject", str(design), str(det_path), "--k", "1", "--out-dir", str(tmp_path / "gen")]
        )
        assert code == 0
        sidecar = json.loads((tmp_path / "gen" / "design_missing1_truth.json").read_text())
        case = sidecar["cases"][0]
        report_path = tmp_path / "report.json"
        code = main(
            [
                "inspect",
                str(design),
                str(tmp_path / "gen" / case["file"]),
                str(det_path),
                "--out",
                str(report_path),
            ]
        )
        assert code == 2
        doc = json.loads(report_path.read_text())
        assert len(doc["missing"]) == 1
        assert doc["missing"][0]["class"] == case["erased"][0]["class"]
        assert doc["missing"][0]["bbox"] == case["erased"][0]["bbox"]

    def test_dimension_mismatch_exits_one(self, tmp_path, capsys):
        a = RasterImage(np.zeros((100, 100), dtype=np.uint8))
        b = RasterImage(np.zeros((90, 90), dtype=np.uint8))
        pa = write_board(tmp_path, "a.png", a)
        pb = write_board(tmp_path, "b.png", b)
        dets = write_detections(tmp_path, "d.json", [], (100, 100))
        assert main(["inspect", str(pa), str(pb), str(dets)]) == 1
        err = capsys.readouterr().err
        assert err.count("\n") == 1
        assert "100x100" in err and "90x90" in err

    def test_unreadable_input_exits_one(self, tmp_path, capsys):
        dets = write_detections(tmp_path, "d.json", [], (4, 4))
        assert main(["inspect", "nope.png", "nope.png", str(dets)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_report_to_stdout_by_default(self, board_setup, capsys):
        board, dets, design, det_path = board_setup
        assert main(["inspect", str(design), str(design), str(det_path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["parameters"]["subtract_mode"] == "saturating"
        assert doc["parameters"]["binarize_threshold"] == "mean"

    def test_darknet_detections_accepted(self, tmp_path, board_setup):
        board, dets, design, _ = board_setup
        lines = []
        for d in dets:
            cx = (d.bbox.x + d.bbox.w / 2) / board.width
            cy = (d.bbox.y + d.bbox.h / 2) / board.height
            lines.append(
                f"{int(d.component)} {cx} {cy} {d.bbox.w / board.width} {d.bbox.h / board.height}"
            )
        txt = tmp_path / "dets.txt"
        txt.write_text("\n".join(lines) + "\n")
        assert main(["inspect", str(design), str(design), str(txt)]) == 0

    def test_annotation_only_touches_strokes(self, tmp_path, board_setup):
        board, dets, design, det_path = board_setup
        gen = tmp_path / "gen"
        main(["inject", str(design), str(det_path), "--k", "1", "--out-dir", str(gen)])
        sidecar = json.loads((gen / "design_missing1_truth.json").read_text())
        case = sidecar["cases"][0]
        annotated_path = tmp_path / "annotated.png"
        code = main(
            [
                "inspect",
                str(design),
                str(gen / case["file"]),
                str(det_path),
                "--out",
                str(tmp_path / "r.json"),
                "--annotate",
                str(annotated_path),
            ]
        )
        assert code == 2
        from PIL import Image

        annotated = np.asarray(Image.open(annotated_path))
        assert annotated.shape == (board.height, board.width, 3)
        test_img = decode_image((gen / case["file"]).read_bytes())
        base = np.repeat(test_img.pixels[:, :, None], 3, axis=2)
        changed = np.argwhere((annotated != base).any(axis=2))
        assert len(changed)  # something was drawn
        box = case["erased"][0]["bbox"]
        for y, x in changed:
            assert box["x"] <= x < box["x"] + box["w"]
            assert box["y"] <= y < box["y"] + box["h"]
            inset_x = min(x - box["x"], box["x"] + box["w"] - 1 - x)
            inset_y = min(y - box["y"], box["y"] + box["h"] - 1 - y)
            assert min(inset_x, inset_y) < 2  # stroke width

    def test_min_diff_pixels_flag(self, tmp_path, board_setup):
        board, dets, design, det_path = board_setup
        gen = tmp_path / "gen"
        main(["inject", str(design), str(det_path), "--k", "1", "--out-dir", str(gen)])
        sidecar = json.loads((gen / "design_missing1_truth.json").read_text())
        test_file = gen / sidecar["cases"][0]["file"]
        huge = str(10**6)
        code = main(
            ["inspect", str(design), str(test_file), str(det_path), "--min-diff-pixels", huge,
             "--out", str(tmp_path / "r.json")]
        )
        assert code == 0  # threshold too demanding: nothing flagged


class TestInject:
    def test_generates_combination_count_and_sidecar(self, tmp_path):
        board, dets = make_board(3, seed=17)
        design = write_board(tmp_path, "brd.png", board)
        det_path = write_detections(tmp_path, "d.json", dets, board.dims)
        out_dir = tmp_path / "out"
        code = main(["inject", str(design), str(det_path), "--k", "1", "--out-dir", str(out_dir)])
        assert code == 0
        files = sorted(p.name for p in out_dir.iterdir())
        assert files == [
            "brd_missing1_000.png",
            "brd_missing1_001.png",
            "brd_missing1_002.png",
            "brd_missing1_truth.json",
        ]
        sidecar = json.loads((out_dir / "brd_missing1_truth.json").read_text())
        assert sidecar["k"] == 1
        assert len(sidecar["cases"]) == 3
        for case in sidecar["cases"]:
            assert len(case["erased"]) == 1

    def test_k_exceeding_detections_exits_one(self, tmp_path, capsys):
        board, dets = make_board(3, seed=18)
        design = write_board(tmp_path, "brd.png", board)
        det_path = write_detections(tmp_path, "d.json", dets, board.dims)
        assert main(["inject", str(design), str(det_path), "--k", "4"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_no_bare_patch_exits_one_naming_component(self, tmp_path, capsys):
        bright = np.full((20, 20), 200, dtype=np.uint8)
        bright[0, 0] = 0
        board = RasterImage(bright)
        dets = [det(2, 2, 10, 10, ComponentClass.IC)]
        design = write_board(tmp_path, "brd.png", board)
        det_path = write_detections(tmp_path, "d.json", dets, board.dims)
        assert main(["inject", str(design), str(det_path), "--k", "1"]) == 1
        assert "IC" in capsys.readouterr().err

    def test_same_seed_byte_identical(self, tmp_path):
        board, dets = make_board(10, seed=19)
        design = write_board(tmp_path, "brd.png", board)
        det_path = write_detections(tmp_path, "d.json", dets, board.dims)
        outs = []
        for run in ("one", "two"):
            out_dir = tmp_path / run
            code = main(
                ["inject", str(design), str(det_path), "--k", "3", "--seed", "42",
                 "--out-dir", str(out_dir)]
            )
            assert code == 0
            outs.append({p.name: p.read_bytes() for p in out_dir.iterdir()})
        assert outs[0] == outs[1]
        assert len(outs[0]) == 101  # 100 sampled cases + sidecar


class TestEval:
    def test_perfect_predictions_all_hundred(self, tmp_path, capsys):
        board, dets = make_board(8, seed=23)
        truth = write_detections(tmp_path, "truth.json", dets, board.dims)
        pred = write_detections(tmp_path, "pred.json", dets, board.dims)
        assert main(["eval", str(pred), str(truth)]) == 0
        out = capsys.readouterr().out
        for line in out.splitlines()[1:]:
            assert line.endswith("100.00")

    def test_reference_counts_reproduced(self, tmp_path, capsys):
        # Build detection files whose confusion counts equal the reference
        # per-class rows: (105, 4, 18), (39, 3, 14), (7, 3, 3), (139, 2, 4).
        rows = {
            ComponentClass.CAPACITOR: (105, 4, 18),
            ComponentClass.RESISTOR: (39, 3, 14),
            ComponentClass.INDUCTOR: (7, 3, 3),
            ComponentClass.IC: (139, 2, 4),
        }
        truth, preds = [], []
        cursor = 0
        for component, (tp, fp, fn) in rows.items():
            for _ in range(tp):  # matched pairs
                truth.append(det(cursor * 4, 0, 3, 3, component))
                preds.append(det(cursor * 4, 0, 3, 3, component, 0.9))
                cursor += 1
            for _ in range(fp):  # unmatched predictions
                preds.append(det(cursor * 4, 10, 3, 3, component, 0.8))
                cursor += 1
            for _ in range(fn):  # unmatched truths
                truth.append(det(cursor * 4, 20, 3, 3, component))
                cursor += 1
        dims = (cursor * 4 + 10, 30)
        tpath = write_detections(tmp_path, "t.json", truth, dims)
        ppath = write_detections(tmp_path, "p.json", preds, dims)
        out_json = tmp_path / "report.json"
        assert main(["eval", str(ppath), str(tpath), "--out", str(out_json)]) == 0
        report = json.loads(out_json.read_text())
        by_class = {r["class"]: r for r in report["classes"]}
        for component, (tp, fp, fn) in rows.items():
            row = by_class[component.label]
            assert (row["tp"], row["fp"], row["fn"]) == (tp, fp, fn)
        printed = [by_class[c]["accuracy"] for c in ("Capacitor", "Resistor", "Inductor", "IC")]
        for got, target in zip(printed, (82.67, 69.64, 53.84, 95.86)):
            assert got == pytest.approx(target, abs=0.05)

    def test_empty_files_exit_zero(self, tmp_path, capsys):
        t = write_detections(tmp_path, "t.json", [], (10, 10))
        p = write_detections(tmp_path, "p.json", [], (10, 10))
        assert main(["eval", str(p), str(t)]) == 0
        report_lines = capsys.readouterr().out.strip().splitlines()
        assert len(report_lines) == 1  # header only

    def test_accepts_inspect_report_as_predictions(self, tmp_path, board_setup):
        board, dets, design, det_path = board_setup
        gen = tmp_path / "gen"
        main(["inject", str(design), str(det_path), "--k", "2", "--out-dir", str(gen)])
        sidecar = json.loads((gen / "design_missing2_truth.json").read_text())
        case = sidecar["cases"][0]
        report_path = tmp_path / "report.json"
        main(
            ["inspect", str(design), str(gen / case["file"]), str(det_path),
             "--out", str(report_path)]
        )
        truth_path = tmp_path / "truth.json"
        truth_path.write_text(
            json.dumps({"image": sidecar["image"], "detections": case["erased"]})
        )
        out_json = tmp_path / "eval.json"
        assert main(["eval", str(report_path), str(truth_path), "--out", str(out_json)]) == 0
        report = json.loads(out_json.read_text())
        assert report["aggregate"]["accuracy"] == 100.0

    def test_parse_failure_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        good = write_detections(tmp_path, "t.json", [], (4, 4))
        assert main(["eval", str(bad), str(good)]) == 1


class TestNmsCommand:
    def test_single_detection_unchanged(self, tmp_path, capsys):
        dets = [det(0, 0, 5, 5, conf=0.9)]
        path = write_detections(tmp_path, "d.json", dets, (50, 50))
        assert main(["nms", str(path)]) == 0
        assert json.loads(capsys.readouterr().out) == json.loads(path.read_text())

    def test_duplicate_suppressed(self, tmp_path, capsys):
        dets = [det(0, 0, 10, 10, conf=0.9), det(0, 0, 10, 10, conf=0.8)]
        path = write_detections(tmp_path, "d.json", dets, (50, 50))
        assert main(["nms", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["detections"]) == 1
        assert doc["detections"][0]["confidence"] == 0.9

    def test_iou_threshold_one_keeps_duplicates(self, tmp_path, capsys):
        dets = [det(0, 0, 10, 10, conf=0.9), det(0, 0, 10, 10, conf=0.8)]
        path = write_detections(tmp_path, "d.json", dets, (50, 50))
        assert main(["nms", str(path), "--iou-threshold", "1.0"]) == 0
        assert len(json.loads(capsys.readouterr().out)["detections"]) == 2

    def test_darknet_requires_image_size(self, tmp_path, capsys):
        txt = tmp_path / "d.txt"
        txt.write_text("0 0.5 0.5 0.5 0.5\n")
        assert main(["nms", str(txt)]) == 1
        assert "--image-size" in capsys.readouterr().err
        assert main(["nms", str(txt), "--image-size", "100x100"]) == 0

    def test_parse_failure_exits_one(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("...")
        assert main(["nms", str(bad)]) == 1

    def test_image_size_conflict_with_json_document(self, tmp_path, capsys):
        path = write_detections(tmp_path, "d.json", [det(0, 0, 5, 5)], (50, 50))
        assert main(["nms", str(path), "--image-size", "64x64"]) == 1
        assert "conflicts" in capsys.readouterr().err


class TestConfigFile:
    def test_parse_config_syntax(self):
        cfg = parse_config("# comment\nsubtract-mode = absolute\nmin_diff_pixels=3\n")
        assert cfg == {"subtract-mode": "absolute", "min-diff-pixels": "3"}
        with pytest.raises(ValueError):
            parse_config("not a pair\n")

    def test_config_sets_defaults_flags_win(self, tmp_path, board_setup, capsys):
        board, dets, design, det_path = board_setup
        cfg = tmp_path / "pcbaoi.conf"
        cfg.write_text("subtract-mode = absolute\nmin-diff-pixels = 7\n")
        main(["inspect", str(design), str(design), str(det_path), "--config", str(cfg)])
        doc = json.loads(capsys.readouterr().out)
        assert doc["parameters"]["subtract_mode"] == "absolute"
        assert doc["parameters"]["min_diff_pixels"] == 7
        main(
            ["inspect", str(design), str(design), str(det_path), "--config", str(cfg),
             "--subtract-mode", "saturating"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert doc["parameters"]["subtract_mode"] == "saturating"
        assert doc["parameters"]["min_diff_pixels"] == 7

    def test_color_override(self, tmp_path):
        cfg_map = ClassColorMap({**{c: (int(c), 0, 0) for c in ComponentClass}})
        img = RasterImage(np.zeros((10, 10), dtype=np.uint8))
        flagged = [
            FlaggedDetection(
                detection=det(2, 2, 6, 6, ComponentClass.IC), matched_pixel=PixelCoord(3, 3)
            )
        ]
        rgb = render_missing(img, flagged, cfg_map)
        assert tuple(rgb[2, 2]) == (3, 0, 0)

    def test_duplicate_colors_rejected(self):
        with pytest.raises(ValueError):
            ClassColorMap({c: (1, 2, 3) for c in ComponentClass})


class TestDeterminism:
    def test_inspect_byte_identical_runs(self, tmp_path, board_setup):
        board, dets, design, det_path = board_setup
        gen = tmp_path / "gen"
        main(["inject", str(design), str(det_path), "--k", "1", "--out-dir", str(gen)])
        sidecar = json.loads((gen / "design_missing1_truth.json").read_text())
        test_file = gen / sidecar["cases"][0]["file"]
        blobs = []
        for run in ("a", "b"):
            report = tmp_path / f"report_{run}.json"
            annotated = tmp_path / f"annot_{run}.png"
            code = main(
                ["inspect", str(design), str(test_file), str(det_path),
                 "--out", str(report), "--annotate", str(annotated)]
            )
            assert code == 2
            blobs.append(report.read_bytes() + annotated.read_bytes())
        assert blobs[0] == blobs[1]
