import numpy as np

from namethat.embeddings import EmbeddingRecord, EmbeddingSet
from namethat.evaluate import EvalConfig, calibrate_threshold, eval_protocol
from namethat.report import plot_eval_curves, plot_threshold_sweep


def labeled_set():
    rng = np.random.default_rng(1)
    records = []
    for c in range(3):
        center = np.zeros(10)
        center[c] = 1.0
        for s in range(4):
            v = center + 0.05 * rng.standard_normal(10)
            records.append(EmbeddingRecord(f"c{c}-{s}", f"class{c}", v / np.linalg.norm(v)))
    return EmbeddingSet(10, records)


def test_curve_figure_written(tmp_path):
    embeddings = labeled_set()
    off = eval_protocol(embeddings, EvalConfig(seed=0, temperature=0.1))
    on = eval_protocol(embeddings, EvalConfig(seed=0, corrections="last",
                                              temperature=0.1))
    path = tmp_path / "curves.png"
    plot_eval_curves({"corrections off": off.rows, "corrections on": on.rows}, path)
    assert path.exists() and path.stat().st_size > 1000


def test_sweep_figure_written(tmp_path):
    result = calibrate_threshold(labeled_set(), ["class2"], seed=0)
    path = tmp_path / "sweep.png"
    plot_threshold_sweep(result, path)
    assert path.exists() and path.stat().st_size > 1000
