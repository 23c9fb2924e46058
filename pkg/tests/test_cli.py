import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np
import pytest

from featureclock import from_labels, pca_2d, standardize_columns
from featureclock.cli import demo_paths, main


def run(args):
    return main([str(a) for a in args])


def write_matrix(path, header, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return path


def write_labels(path, tokens):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label"])
        for token in tokens:
            writer.writerow([token])
    return path


@pytest.fixture(scope="module")
def iris_paths():
    return demo_paths()


@pytest.fixture
def noise_inputs(tmp_path):
    rng = np.random.default_rng(0)
    x = write_matrix(tmp_path / "x.csv", ["f0", "f1", "f2"], rng.normal(size=(100, 3)))
    y = write_matrix(tmp_path / "y.csv", ["x", "y"], rng.normal(size=(100, 2)))
    return x, y


@pytest.fixture
def shifted_inputs(tmp_path):
    rng = np.random.default_rng(2)
    n = 250
    a = rng.normal(size=(n, 3))
    b = rng.normal(size=(n, 3))
    b[:, 0] += 5.0
    x = write_matrix(tmp_path / "x.csv", ["f0", "f1", "f2"], np.vstack([a, b]))
    ya = rng.normal(scale=0.5, size=(n, 2))
    yb = rng.normal(scale=0.5, size=(n, 2)) + np.array([10.0, 0.0])
    y = write_matrix(tmp_path / "y.csv", ["x", "y"], np.vstack([ya, yb]))
    labels = write_labels(tmp_path / "labels.csv", ["low"] * n + ["high"] * n)
    return x, y, labels


class TestGlobalCommand:
    def test_iris_top4_matches_loadings(self, iris_paths, iris_dataset, tmp_path):
        x, y, _ = iris_paths
        out = tmp_path / "out"
        assert run(["global", "--x", x, "--y", y, "--top-k", "4", "--out-dir", out]) == 0
        report = json.loads((out / "clock.json").read_text())
        arrows = report["clocks"][0]["arrows"]
        assert len(arrows) == 4
        z, _, _ = standardize_columns(iris_dataset.X)
        model = pca_2d(z)
        names = list(iris_dataset.feature_names)
        for arrow in arrows:
            j = names.index(arrow["feature"])
            loading = np.array([model.components[0, j], model.components[1, j]])
            vec = np.array([arrow["beta0"], arrow["beta90"]])
            cos = float(loading @ vec / (np.linalg.norm(loading) * np.linalg.norm(vec)))
            assert cos > 0.9999

    def test_missing_file_exit_2(self, iris_paths, tmp_path, capsys):
        x, _, _ = iris_paths
        code = run(["global", "--x", x, "--y", tmp_path / "absent.csv"])
        assert code == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_tiny_alpha_on_noise_warns_empty(self, noise_inputs, tmp_path, capsys):
        x, y = noise_inputs
        out = tmp_path / "out"
        code = run(["global", "--x", x, "--y", y, "--alpha", "0.0001", "--out-dir", out])
        assert code == 0
        assert "no significant features" in capsys.readouterr().err
        report = json.loads((out / "clock.json").read_text())
        assert report["clocks"][0]["arrows"] == []
        assert any("no significant" in w for w in report["warnings"])

    def test_bad_alpha_exit_2(self, noise_inputs, capsys):
        x, y = noise_inputs
        assert run(["global", "--x", x, "--y", y, "--alpha", "1.5"]) == 2

    def test_defaults_echoed(self, iris_paths, tmp_path):
        x, y, _ = iris_paths
        out = tmp_path / "out"
        assert run(["global", "--x", x, "--y", y, "--out-dir", out]) == 0
        config = json.loads((out / "clock.json").read_text())["config"]
        assert config["alpha"] == 0.05
        assert config["theta_step_deg"] == 5.0
        assert config["standardize_x"] is True
        assert config["center_y"] is True
        assert config["significance_rule"] == "or"

    def test_theta_adjustment_warned_and_recorded(self, iris_paths, tmp_path, capsys):
        x, y, _ = iris_paths
        out = tmp_path / "out"
        assert run(["global", "--x", x, "--y", y, "--theta-step", "7", "--out-dir", out]) == 0
        assert "7.2" in capsys.readouterr().err
        report = json.loads((out / "clock.json").read_text())
        assert report["config"]["theta_step_deg"] == 7.2
        assert any("7.2" in w for w in report["warnings"])

    def test_circles_flag_switches_variant(self, iris_paths, tmp_path):
        x, y, _ = iris_paths
        out = tmp_path / "out"
        assert run(["global", "--x", x, "--y", y, "--circles", "--out-dir", out]) == 0
        report = json.loads((out / "clock.json").read_text())
        clock = report["clocks"][0]
        assert clock["variant"] == "circles"
        assert len(clock["circles"]["petal_length"]) == 36
        assert "<polyline" in (out / "clock.svg").read_text()


class TestLocalCommand:
    def test_iris_species_three_clocks(self, iris_paths, tmp_path):
        x, y, labels = iris_paths
        out = tmp_path / "out"
        code = run(["local", "--x", x, "--y", y, "--labels", labels, "--out-dir", out])
        assert code == 0
        report = json.loads((out / "clock.json").read_text())
        assert len(report["clocks"]) == 3
        assert [c["group"] for c in report["clocks"]] == ["setosa", "versicolor", "virginica"]
        assert all(c["member_count"] == 50 for c in report["clocks"])

    def test_single_label_reduces_to_global(self, iris_paths, tmp_path):
        x, y, _ = iris_paths
        labels = write_labels(tmp_path / "one.csv", ["all"] * 150)
        out_local = tmp_path / "local"
        out_global = tmp_path / "global"
        assert run(["local", "--x", x, "--y", y, "--labels", labels, "--out-dir", out_local]) == 0
        assert run(["global", "--x", x, "--y", y, "--out-dir", out_global]) == 0
        local = json.loads((out_local / "clock.json").read_text())["clocks"][0]
        global_ = json.loads((out_global / "clock.json").read_text())["clocks"][0]
        for a, b in zip(local["arrows"], global_["arrows"]):
            assert a["feature"] == b["feature"]
            assert abs(a["magnitude"] - b["magnitude"]) < 1e-12
            assert abs(a["angle_deg"] - b["angle_deg"]) < 1e-12

    def test_dbscan_all_noise_exit_3(self, noise_inputs, capsys):
        x, y = noise_inputs
        code = run(["local", "--x", x, "--y", y, "--cluster", "dbscan:0.0001,5"])
        assert code == 3
        assert "no usable groups" in capsys.readouterr().err

    def test_kmeans_clustering_runs(self, iris_paths, tmp_path):
        x, y, _ = iris_paths
        out = tmp_path / "out"
        code = run(["local", "--x", x, "--y", y, "--cluster", "kmeans:2", "--out-dir", out])
        assert code == 0
        report = json.loads((out / "clock.json").read_text())
        assert len(report["clocks"]) == 2

    def test_grouping_source_required(self, noise_inputs):
        x, y = noise_inputs
        assert run(["local", "--x", x, "--y", y]) == 2

    def test_cluster_on_embedding_space(self, tmp_path):
        rng = np.random.default_rng(3)
        xm = rng.normal(size=(80, 3))  # featureless in X
        ym = np.vstack(
            [rng.normal(scale=0.3, size=(40, 2)), rng.normal(scale=0.3, size=(40, 2)) + 20.0]
        )
        x = write_matrix(tmp_path / "x.csv", ["f0", "f1", "f2"], xm)
        y = write_matrix(tmp_path / "y.csv", ["x", "y"], ym)
        out = tmp_path / "out"
        code = run(
            ["local", "--x", x, "--y", y, "--cluster", "kmeans:2", "--cluster-on", "y", "--out-dir", out]
        )
        assert code == 0
        report = json.loads((out / "clock.json").read_text())
        counts = sorted(c["member_count"] for c in report["clocks"])
        assert counts == [40, 40]


class TestIntergroupCommand:
    def test_shifted_feature_tops_single_edge(self, shifted_inputs, tmp_path):
        x, y, labels = shifted_inputs
        out = tmp_path / "out"
        code = run(["intergroup", "--x", x, "--y", y, "--labels", labels, "--out-dir", out])
        assert code == 0
        report = json.loads((out / "clock.json").read_text())
        assert len(report["clocks"]) == 1
        arrows = report["clocks"][0]["arrows"]
        assert arrows[0]["feature"] == "f0"
        assert len(report["mst"]) == 1

    def test_three_groups_two_edges(self, tmp_path):
        rng = np.random.default_rng(7)
        n = 60
        xm = rng.normal(size=(3 * n, 3))
        xm[n : 2 * n, 0] += 2.0
        xm[2 * n :, 0] += 4.0
        ym = rng.normal(scale=0.3, size=(3 * n, 2))
        ym[n : 2 * n, 0] += 5.0
        ym[2 * n :, 0] += 10.0
        x = write_matrix(tmp_path / "x.csv", ["f0", "f1", "f2"], xm)
        y = write_matrix(tmp_path / "y.csv", ["x", "y"], ym)
        labels = write_labels(tmp_path / "l.csv", ["a"] * n + ["b"] * n + ["c"] * n)
        out = tmp_path / "out"
        code = run(["intergroup", "--x", x, "--y", y, "--labels", labels, "--out-dir", out])
        assert code == 0
        report = json.loads((out / "clock.json").read_text())
        assert len(report["mst"]) == 2
        assert len(report["clocks"]) == 2

    def test_and_rule_is_subset_of_or_rule(self, shifted_inputs, tmp_path):
        x, y, labels = shifted_inputs
        out_or = tmp_path / "or"
        out_and = tmp_path / "and"
        base = ["intergroup", "--x", x, "--y", y, "--labels", labels]
        assert run(base + ["--out-dir", out_or]) == 0
        assert run(base + ["--significance-rule", "and", "--out-dir", out_and]) == 0
        arrows_or = {
            a["feature"] for c in json.loads((out_or / "clock.json").read_text())["clocks"] for a in c["arrows"]
        }
        arrows_and = {
            a["feature"] for c in json.loads((out_and / "clock.json").read_text())["clocks"] for a in c["arrows"]
        }
        assert arrows_and <= arrows_or

    def test_single_group_exit_3(self, iris_paths, tmp_path, capsys):
        x, y, _ = iris_paths
        labels = write_labels(tmp_path / "one.csv", ["all"] * 150)
        code = run(["intergroup", "--x", x, "--y", y, "--labels", labels])
        assert code == 3
        assert "at least 2 groups" in capsys.readouterr().err


def hash_tree(directory):
    out = {}
    for path in sorted(Path(directory).iterdir()):
        out[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


# sha256 of every demo output; regenerate with `featureclock demo` if the
# rendering or report format changes on purpose.
DEMO_GOLDEN = {
    "global_clock.json": "c627a6762ea854964292f7438b0097485656287a4722f58540f910e4d8f5113f",
    "global_clock.svg": "fb9b7986b4c9e1fca592f9fe9a2164aa9277b09558ccebae0e2280045421a618",
    "intergroup_clocks.json": "2725f911ae7bd6e8aad1e9ca5315e7a9d29b596b76b7dfdbefcb51c60d439c12",
    "intergroup_clocks.svg": "4f5c0e7cf29aaa81bf1c17001a0a7e680dc2f1ab1c423d2950d74868e43ebf55",
    "local_clocks.json": "2e2775d542465fa20c4aba3aa3c666cd5a27ca0462981ef621d47a385164a973",
    "local_clocks.svg": "412971e8936b20367f9a331b97368d609b231345e9afdc2e76bc902531827cc2",
}


class TestDemo:
    def test_outputs_and_determinism(self, tmp_path):
        first = tmp_path / "a"
        second = tmp_path / "b"
        assert run(["demo", "--out-dir", first]) == 0
        assert run(["demo", "--out-dir", second]) == 0
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(DEMO_GOLDEN)
        assert hash_tree(first) == hash_tree(second)

    def test_golden_hashes(self, tmp_path):
        out = tmp_path / "golden"
        assert run(["demo", "--out-dir", out]) == 0
        assert hash_tree(out) == DEMO_GOLDEN

    def test_sepal_width_points_at_setosa(self, tmp_path, iris_dataset):
        out = tmp_path / "demo"
        assert run(["demo", "--out-dir", out]) == 0
        report = json.loads((out / "global_clock.json").read_text())
        clock = report["clocks"][0]
        arrow = next(a for a in clock["arrows"] if a["feature"] == "sepal_width")
        grouping = from_labels(iris_dataset.labels, iris_dataset.Y)
        setosa = next(g for g in grouping.groups if g.name == "setosa")
        direction = np.array(setosa.center) - np.array(clock["anchor"])
        assert arrow["beta0"] * direction[0] + arrow["beta90"] * direction[1] > 0

    def test_svg_annotations_match_json_magnitudes(self, tmp_path):
        out = tmp_path / "demo"
        assert run(["demo", "--out-dir", out]) == 0
        for stem in ("global_clock", "local_clocks", "intergroup_clocks"):
            report = json.loads((out / f"{stem}.json").read_text())
            svg = (out / f"{stem}.svg").read_text()
            texts = set(re.findall(r'font-size="11"[^>]*>([0-9.]+)</text>', svg))
            for clock in report["clocks"]:
                for arrow in clock["arrows"]:
                    assert f"{arrow['magnitude']:.2f}" in texts

    def test_bundled_embedding_is_own_pca_output(self, iris_dataset):
        z, _, _ = standardize_columns(iris_dataset.X)
        scores = pca_2d(z).transform(z)
        assert np.max(np.abs(scores - iris_dataset.Y)) < 1e-9

    def test_json_schema_fields(self, tmp_path):
        out = tmp_path / "demo"
        assert run(["demo", "--out-dir", out]) == 0
        report = json.loads((out / "global_clock.json").read_text())
        assert report["schema_version"] == 1
        assert report["tool"] == "featureclock"
        assert report["inputs"]["x"] == "iris_features.csv"
        assert report["inputs"]["rows"] == 150
        keys = (out / "global_clock.json").read_text()
        parsed = json.loads(keys)
        assert list(parsed) == sorted(parsed)  # key-sorted at the top level
