"""Stage runners and the end-to-end pipeline.

Each stage reads its predecessor's files and writes its own into
``out_dir``; :func:`run_pipeline` chains the same functions, so running the
stages one by one reproduces the pipeline output byte for byte.

Artifacts::

    standardize  standardized.csv
    screen       screening.json, screened.csv
    gra          gra.json, degrees.csv
    grade        grading.json, levels.csv
    train        model.json, trace.csv
    predict      predictions.csv, evaluation.json (when labels are given)
    explain      explanation.json
    pipeline     all of the above plus report.json
"""

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures
from .data import INDICATOR_GROUPS, load_matrix, save_matrix, standardize
from .exceptions import EmptyInputError, MatrixParseError
from .explain import explain_model
from .grading import classify, kmeans
from .grey import grey_relational
from .network import MlpModel, TrainParams, evaluate, forward, init_network, predict_level, train_lm
from .screening import screen

STAGES = ("standardize", "screen", "gra", "grade", "train", "predict", "explain", "pipeline", "synth")


@dataclass
class PipelineConfig:
    input: str = None
    out_dir: str = "out"
    rho: float = 0.5
    corr_threshold: float = 0.85
    var_threshold: float = 0.8
    load_threshold: float = 0.8
    k: int = 3
    split: int = 25
    hidden: int = 6
    seed: int = 0
    train: TrainParams = field(default_factory=TrainParams)
    labels: str = None
    model: str = None
    levels: str = None
    groups: dict = field(default_factory=lambda: dict(INDICATOR_GROUPS))
    importance_repeats: int = 10
    lime_samples: int = 1000
    kernel_width: float = 0.75
    explain_slice: str = None  # default: last slice

    def __post_init__(self):
        for name in ("corr_threshold", "var_threshold", "load_threshold"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.k < 1 or self.hidden < 1 or self.split < 1:
            raise ValueError("k, hidden and split must be positive")

    def to_dict(self):
        d = asdict(self)
        d["groups"] = {k: list(v) for k, v in self.groups.items()}
        return d


def resolve(path):
    """``fixture:<name>`` points at a CSV shipped with the package."""
    if path is None:
        return None
    path = str(path)
    if path.startswith("fixture:"):
        return fixtures.path(path.split(":", 1)[1])
    return Path(path)


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_series(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def read_series(path, value_type=float):
    """Two-column ``label,value`` CSV."""
    m = load_matrix(path)
    if m.shape[1] != 1:
        raise MatrixParseError(f"{path}: expected 2 columns (label,value), got {m.shape[1] + 1}")
    return list(m.slice_labels), [value_type(v) for v in m.values[:, 0]]


def _out(config, name):
    d = Path(config.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


# stage bodies: in-memory inputs, files out

def do_standardize(config, raw):
    z = standardize(raw)
    save_matrix(z, _out(config, "standardized.csv"))
    return z


def do_screen(config, raw):
    report = screen(raw, config.corr_threshold, config.var_threshold, config.load_threshold,
                    config.groups)
    z = raw if raw.standardized else standardize(raw)
    screened = z.select(report.retained_ids)
    dump_json(report.to_dict(), _out(config, "screening.json"))
    save_matrix(screened, _out(config, "screened.csv"))
    return report, screened


def do_gra(config, m):
    result = grey_relational(m, config.rho)
    dump_json(result.to_dict(), _out(config, "gra.json"))
    write_series(_out(config, "degrees.csv"), ["label", "degree"],
                 zip(result.slice_labels, result.degrees.tolist()))
    return result


def do_grade(config, labels, degrees):
    model = kmeans(degrees, config.k, seed=config.seed)
    codes = [int(classify(d, model.thresholds)) for d in degrees]
    doc = model.to_dict()
    doc["levels"] = dict(zip(labels, codes))
    dump_json(doc, _out(config, "grading.json"))
    levels_path = Path(config.levels) if config.levels else _out(config, "levels.csv")
    write_series(levels_path, ["label", "level"], zip(labels, codes))
    return model, codes


def _check_split(config, m, need_test=True):
    if config.split >= m.shape[0] and need_test:
        raise ValueError(f"split {config.split} leaves no test slices out of {m.shape[0]}")


def _align(m, labels, codes):
    if list(m.slice_labels) != list(labels):
        raise ValueError("level labels do not match the matrix slice labels")
    return np.asarray(codes, dtype=int)


def do_train(config, m, codes):
    _check_split(config, m, need_test=False)
    params = config.train
    init = init_network(m.shape[1], config.hidden, 1, config.seed)
    X = m.values[: config.split]
    y = np.asarray(codes[: config.split], dtype=float)
    net, trace = train_lm(init, X, y, params)
    doc = net.to_dict()
    doc["indicator_ids"] = list(m.indicator_ids)
    dump_json(doc, _out(config, "model.json"))
    _out(config, "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    return net, trace


def do_predict(config, m, net, codes=None):
    raw = forward(net, m.values)[:, 0]
    predicted = [int(v) for v in predict_level(net, m.values)]
    write_series(_out(config, "predictions.csv"), ["label", "output", "level"],
                 zip(m.slice_labels, raw.tolist(), predicted))
    if codes is None:
        return predicted, None
    _check_split(config, m)
    test = slice(config.split, None)
    accuracy = evaluate(net, m.values[test], codes[test])
    doc = {
        "split": config.split,
        "test_accuracy": accuracy,
        "test_levels": dict(zip(m.slice_labels[test], [int(c) for c in codes[test]])),
        "test_predictions": dict(zip(m.slice_labels[test], predicted[test])),
    }
    dump_json(doc, _out(config, "evaluation.json"))
    return predicted, doc


def do_explain(config, m, net, codes):
    label = config.explain_slice or m.slice_labels[-1]
    if label not in m.slice_labels:
        raise ValueError(f"explain slice {label!r} not in the matrix")
    x = m.values[m.slice_labels.index(label)]
    exp = explain_model(net, m.values, codes, x, m.indicator_ids, seed=config.seed,
                        repeats=config.importance_repeats, n_samples=config.lime_samples,
                        kernel_width=config.kernel_width)
    doc = exp.to_dict()
    doc["slice"] = label
    dump_json(doc, _out(config, "explanation.json"))
    return doc


# loading helpers shared by the CLI stages

def _require(path, what):
    p = resolve(path)
    if p is None:
        raise FileNotFoundError(f"missing {what}: pass it on the command line")
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def load_model(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return MlpModel.from_dict(doc), doc.get("indicator_ids")


def _model_matrix(m, ids):
    return m.select(ids) if ids and tuple(ids) != m.indicator_ids else m


def run_stage(stage, config):
    """Run one stage, reading ``config.input`` (and labels/model as needed)."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; valid stages: {', '.join(STAGES)}")
    if stage == "pipeline":
        return run_pipeline(config)
    if stage == "synth":
        from .data import SynthEventConfig, synth_event

        m = synth_event(SynthEventConfig(seed=config.seed))
        save_matrix(m, _out(config, "synthetic.csv"))
        return m

    src = _require(config.input, "--input")
    if stage == "grade":
        labels, degrees = read_series(src)
        return do_grade(config, labels, degrees)

    m = load_matrix(src)
    if stage == "standardize":
        return do_standardize(config, m)
    if stage == "screen":
        return do_screen(config, m)
    if stage == "gra":
        return do_gra(config, m)

    labels = codes = None
    if config.labels is not None or stage in ("train", "explain"):
        labels, codes = read_series(_require(config.labels, "--labels"), int)
        codes = _align(m, labels, codes)
    if stage == "train":
        return do_train(config, m, codes)

    net, ids = load_model(_require(config.model, "--model"))
    m = _model_matrix(m, ids)
    if stage == "predict":
        return do_predict(config, m, net, codes)
    return do_explain(config, m, net, codes)


def run_pipeline(config):
    """Standardize, screen, grade, train, evaluate and explain; write ``report.json``."""
    raw = load_matrix(_require(config.input, "--input"))
    if raw.shape[0] < config.split + 1:
        raise EmptyInputError(
            f"pipeline needs more than split={config.split} slices, got {raw.shape[0]}"
        )
    do_standardize(config, raw)
    report, screened = do_screen(config, raw)
    # re-read what was written so the chain matches stage-by-stage runs
    screened = load_matrix(_out(config, "screened.csv"))
    gra = do_gra(config, screened)
    labels, degrees = read_series(_out(config, "degrees.csv"))
    grading, codes = do_grade(config, labels, degrees)
    codes = np.asarray(codes, dtype=int)
    net, trace = do_train(config, screened, codes)
    net, ids = load_model(_out(config, "model.json"))
    predicted, evaluation = do_predict(config, screened, net, codes)
    explanation = do_explain(config, screened, net, codes)

    doc = {
        # out_dir is where the report lives; leaving it out keeps reruns comparable
        "config": {k: v for k, v in config.to_dict().items() if k != "out_dir"},
        "retained_ids": list(report.retained_ids),
        "information_contribution": report.in_rate,
        "centers": grading.to_dict()["centers"],
        "thresholds": grading.thresholds.tolist(),
        "levels": dict(zip(labels, [int(c) for c in codes])),
        "training": trace.to_dict(),
        "test_accuracy": evaluation["test_accuracy"],
        "test_predictions": evaluation["test_predictions"],
        "explanation": explanation,
    }
    dump_json(doc, _out(config, "report.json"))
    return doc

