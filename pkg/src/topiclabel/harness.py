"""Cross-validated evaluation, pair scoring, scaling benchmark and reports."""
import dataclasses
import hashlib
import json
import logging
import statistics
import timeit
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .baselines import (
    GlobalPprRanker, local_ppr_rank, predict_linear, train_linear, transition_matrix,
)
from .dataset import (
    CANDIDATES_PER_TOPIC, FoldSplit, check_no_leakage, evaluation_pairs, kfold_split, load_dataset,
    training_pairs,
)
from .embeddings import load_embeddings, tokenize
from .errors import ConfigError
from .features import FeatureConfig, build_input, featurize_pairs
from .metrics import ndcg_at_k, paired_t_test, rank_by_scores, top1_average_rating
from .neuralnet import (
    TrainConfig, init_model, load_model, predict, predict_batch, save_model, train,
)

log = logging.getLogger(__name__)

NDCG_CUTOFFS = (1, 3, 5)
SIGNIFICANCE = 0.01
DEFAULT_METHODS = ("dnn", "linear", "local-ppr", "global-ppr")
ABLATIONS = ("dnn:topic+caption", "dnn:topic+vgg", "dnn:topic+caption+vgg")

# Published results for reference only; (top-1, nDCG-1, nDCG-3, nDCG-5).
REFERENCE_RESULTS = (
    ("Global PPR", 1.89, 0.71, 0.74, 0.75),
    ("Local PPR", 2.00, 0.74, 0.75, 0.76),
    ("WSABIE", 1.87, 0.65, 0.68, 0.70),
    ("LR (Topic+Caption+VGG)", 1.91, 0.71, 0.74, 0.75),
    ("SVM (Topic+Caption+VGG)", 1.94, 0.72, 0.75, 0.76),
    ("DNN (Topic+Caption)", 1.94, 0.73, 0.75, 0.76),
    ("DNN (Topic+VGG)", 2.04, 0.76, 0.79, 0.80),
    ("DNN (Topic+Caption+VGG)", 2.12, 0.79, 0.80, 0.81),
)


@dataclass
class RunConfig:
    embeddings: str = None
    topics: str = None
    candidates: str = None
    visuals: str = None
    features: str = "topic+caption+vgg"
    methods: str = ",".join(DEFAULT_METHODS)
    seed: int = 0
    folds: int = 5
    epochs: int = 30
    batch_size: int = 16
    dropout: float = 0.2
    lr: float = 1e-3
    decay: float = 0.9
    epsilon: float = 1e-8
    negatives: int = CANDIDATES_PER_TOPIC
    damping: float = 0.85
    tol: float = 1e-10
    max_iters: int = 200
    top_m: int = None
    l2: float = 1.0
    gain: str = "linear"
    strict: bool = True
    text_dim: int = 300
    visual_dim: int = 1000
    out: str = None
    report: str = None

    _OUTPUT_FIELDS = ("out", "report")

    def train_config(self, seed=None):
        return TrainConfig(self.epochs, self.batch_size, self.dropout, self.lr, self.decay,
                           self.epsilon, self.seed if seed is None else seed)

    def feature_config(self, name=None):
        return FeatureConfig.from_name(name or self.features, self.text_dim, self.visual_dim)

    def method_list(self):
        methods = [m.strip() for m in self.methods.split(",") if m.strip()]
        for m in methods:
            _method_kind(m)
        return methods

    def fingerprint(self):
        body = {k: v for k, v in dataclasses.asdict(self).items() if k not in self._OUTPUT_FIELDS}
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]

    def check_paths(self):
        for name in ("embeddings", "topics", "candidates", "visuals"):
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"--{name} is required")
            if not Path(value).exists():
                raise ConfigError(f"{name} file not found: {value}")


def _coerce(fld, text):
    kind = fld.type if isinstance(fld.type, str) else fld.type.__name__
    if text.lower() in ("none", "") and fld.default is None:
        return None
    if kind == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{fld.name}: expected a boolean, got {text!r}")
    if kind == "int" or (fld.name == "top_m"):
        return int(text)
    if kind == "float":
        return float(text)
    return text


def read_config_file(path):
    """Parse a flat ``key = value`` file (``#`` comments) into RunConfig fields."""
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in fields:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(fields[key], value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def make_config(config_file=None, **overrides):
    """Defaults < config file < explicit overrides (``None`` means not given)."""
    values = read_config_file(config_file) if config_file else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def _method_kind(method):
    kind, _, features = method.partition(":")
    if kind not in ("dnn", "linear", "local-ppr", "global-ppr"):
        raise ConfigError(f"unknown method {method!r}")
    if features and kind not in ("dnn", "linear"):
        raise ConfigError(f"method {kind} takes no feature configuration")
    if features:
        FeatureConfig.from_name(features)
    return kind, features or None


@dataclass
class FoldMetrics:
    top1: float
    ndcg: dict  # cutoff -> value
    n_train: int
    n_test: int


@dataclass
class EvaluationReport:
    methods: list
    folds: dict  # method -> [FoldMetrics]
    per_topic_top1: dict  # method -> {topic id: rating}
    seed: int
    fingerprint: str
    gain: str = "linear"
    version: str = __version__
    pvalues: dict = field(default_factory=dict)  # (a, b) -> p

    def aggregate(self, method):
        rows = self.folds[method]
        return (float(np.mean([r.top1 for r in rows])),
                *(float(np.mean([r.ndcg[k] for r in rows])) for k in NDCG_CUTOFFS))

    def compute_pvalues(self):
        self.pvalues = {}
        for i, a in enumerate(self.methods):
            for b in self.methods[i + 1:]:
                topics = sorted(self.per_topic_top1[a])
                xa = [self.per_topic_top1[a][t] for t in topics]
                xb = [self.per_topic_top1[b][t] for t in topics]
                self.pvalues[(a, b)] = paired_t_test(xa, xb) if len(topics) > 1 else 1.0
        return self.pvalues

    def header_lines(self):
        return [
            "# topiclabel evaluation report",
            f"# version\t{self.version}",
            f"# seed\t{self.seed}",
            f"# config\t{self.fingerprint}",
            f"# metric\tndcg gain={self.gain}; discount=log2(rank+1); ties=ascending image id; "
            "ideal dcg 0 -> ndcg 1",
            f"# significance\tpaired t-test over per-topic top-1 ratings, p<{SIGNIFICANCE}",
        ]

    def to_tsv(self):
        lines = self.header_lines()
        lines.append("method\tfold\ttop1_avg\tndcg1\tndcg3\tndcg5\tn_train\tn_test")
        for m in self.methods:
            for i, r in enumerate(self.folds[m]):
                lines.append("\t".join([m, str(i), f"{r.top1:.6f}",
                                        *(f"{r.ndcg[k]:.6f}" for k in NDCG_CUTOFFS),
                                        str(r.n_train), str(r.n_test)]))
            agg = self.aggregate(m)
            lines.append("\t".join([m, "mean", *(f"{v:.6f}" for v in agg), "", ""]))
        lines.append("")
        lines.append("method_a\tmethod_b\tmean_top1_diff\tp_value\tsignificant")
        for (a, b), p in self.pvalues.items():
            diff = self.aggregate(a)[0] - self.aggregate(b)[0]
            lines.append(f"{a}\t{b}\t{diff:.6f}\t{p:.6g}\t{'yes' if p < SIGNIFICANCE else 'no'}")
        return "\n".join(lines) + "\n"

    def to_table(self):
        head = ("Model", "Top-1 aver. rating", "nDCG-1", "nDCG-3", "nDCG-5", "sig. better than")
        rows = []
        for m in self.methods:
            agg = self.aggregate(m)
            beats = []
            for (a, b), p in self.pvalues.items():
                if p < SIGNIFICANCE:
                    diff = self.aggregate(a)[0] - self.aggregate(b)[0]
                    if a == m and diff > 0:
                        beats.append(b)
                    elif b == m and diff < 0:
                        beats.append(a)
            rows.append((m, f"{agg[0]:.2f}", *(f"{v:.2f}" for v in agg[1:]), ", ".join(beats)))
        rows.append(("", "", "", "", "", ""))
        rows.append(("reference (published)", "", "", "", "", ""))
        for name, *vals in REFERENCE_RESULTS:
            rows.append((name, *(f"{v:.2f}" for v in vals), ""))
        widths = [max(len(r[i]) for r in [head, *rows]) for i in range(len(head))]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        out = self.header_lines() + [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
        out += [fmt.format(*r).rstrip() for r in rows]
        return "\n".join(out) + "\n"

    def to_json(self):
        body = {
            "version": self.version, "seed": self.seed, "fingerprint": self.fingerprint,
            "gain": self.gain, "methods": self.methods,
            "folds": {m: [dataclasses.asdict(r) for r in rs] for m, rs in self.folds.items()},
            "per_topic_top1": self.per_topic_top1,
            "pvalues": [[a, b, p] for (a, b), p in self.pvalues.items()],
        }
        return json.dumps(body, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        folds = {m: [FoldMetrics(r["top1"], {int(k): v for k, v in r["ndcg"].items()},
                                 r["n_train"], r["n_test"]) for r in rs]
                 for m, rs in d["folds"].items()}
        return cls(d["methods"], folds, d["per_topic_top1"], d["seed"], d["fingerprint"],
                   d["gain"], d["version"], {(a, b): p for a, b, p in d["pvalues"]})


def _fold_metrics(ranked, gain, n_train, n_test):
    return FoldMetrics(top1_average_rating(ranked),
                       {k: float(np.mean([ndcg_at_k(r, k, gain) for r in ranked]))
                        for k in NDCG_CUTOFFS},
                       n_train, n_test)


def _rank_scored(pairs, scores):
    by_topic = {}
    for (topic, cand), s in zip(pairs, scores):
        by_topic.setdefault(topic.id, []).append((cand, float(s)))
    ranked = []
    for tid, rows in by_topic.items():
        ranked.append(rank_by_scores(tid, [c.image_id for c, _ in rows], [s for _, s in rows],
                                     {c.image_id: c.rating for c, _ in rows}))
    return ranked


def fold_examples(dataset, split, config):
    """Training pairs (with negatives) and test pairs for one fold."""
    train_pairs = training_pairs(dataset, split, config.negatives,
                                 seed=[config.seed, split.fold_index])
    check_no_leakage(train_pairs, split)
    return train_pairs, evaluation_pairs(dataset, split)


def run_cross_validation(config, methods=None, dataset=None, table=None):
    """Evaluate every method on k topic-level folds and return an EvaluationReport."""
    methods = list(methods or config.method_list())
    for m in methods:
        _method_kind(m)
    if dataset is None:
        config.check_paths()
        dataset = load_dataset(config.topics, config.candidates, config.visuals,
                               strict=config.strict, visual_dim=config.visual_dim)
    if table is None:
        table = load_embeddings(config.embeddings, config.text_dim)
    folds = {m: [] for m in methods}
    per_topic = {m: {} for m in methods}
    for split in kfold_split(dataset.topic_ids, config.folds, config.seed):
        train_pairs, test_pairs = fold_examples(dataset, split, config)
        n_train, n_test = len(train_pairs), len(test_pairs)
        log.info("fold %d: %d training, %d test examples", split.fold_index, n_train, n_test)
        matrices = {}

        def features(name):
            if name not in matrices:
                fc = config.feature_config(name)
                matrices[name] = (featurize_pairs(train_pairs, table, fc),
                                  featurize_pairs(test_pairs, table, fc))
            return matrices[name]

        y = np.array([c.rating for _, c in train_pairs])
        ranker = None
        for m in methods:
            kind, fname = _method_kind(m)
            fname = fname or config.features
            if kind == "dnn":
                X_train, X_test = features(fname)
                seed = config.seed * 1000 + split.fold_index
                model = init_model(X_train.shape[1], seed)
                train(model, X_train, y, config.train_config(seed))
                ranked = _rank_scored(test_pairs, predict_batch(model, X_test))
            elif kind == "linear":
                X_train, X_test = features(fname)
                lm = train_linear(X_train, y, config.l2)
                ranked = _rank_scored(test_pairs, predict_linear(lm, X_test))
            elif kind == "local-ppr":
                ranked = [local_ppr_rank(dataset.topic(t), _rated(dataset, t), table,
                                         config.damping, config.tol, config.max_iters,
                                         config.top_m)
                          for t in split.test_topics]
            else:
                if ranker is None:
                    ranker = GlobalPprRanker([c for _, c in test_pairs], table, config.damping,
                                             config.tol, config.max_iters, config.top_m)
                ranked = [ranker.rank(dataset.topic(t), _rated(dataset, t))
                          for t in split.test_topics]
            folds[m].append(_fold_metrics(ranked, config.gain, n_train, n_test))
            for r in ranked:
                per_topic[m][r.topic_id] = float(r.gold[r.image_ids[0]])
    report = EvaluationReport(methods, folds, per_topic, config.seed, config.fingerprint(),
                              config.gain)
    report.compute_pvalues()
    return report


def _rated(dataset, topic_id):
    return [c for c in dataset.candidates[topic_id] if c.rating is not None]


def train_full(config, dataset=None, table=None):
    """Train one DNN on every topic (with negatives) for later pair scoring."""
    if dataset is None:
        config.check_paths()
        dataset = load_dataset(config.topics, config.candidates, config.visuals,
                               strict=config.strict, visual_dim=config.visual_dim)
    if table is None:
        table = load_embeddings(config.embeddings, config.text_dim)
    split = FoldSplit(0, tuple(dataset.topic_ids), ())
    pairs = training_pairs(dataset, split, config.negatives, seed=[config.seed, 0])
    fc = config.feature_config()
    X = featurize_pairs(pairs, table, fc)
    y = np.array([c.rating for _, c in pairs])
    model = init_model(fc.input_dim, config.seed)
    model, history = train(model, X, y, config.train_config())
    model.feature_config = {"name": fc.name, "text_dim": fc.text_dim, "visual_dim": fc.visual_dim}
    return model, history


def model_feature_config(model):
    meta = model.feature_config
    if not meta:
        raise ConfigError("model file carries no feature configuration")
    return FeatureConfig.from_name(meta["name"], meta["text_dim"], meta["visual_dim"])


def score_pair(model, topic_terms, caption, visual, table):
    """Score one arbitrary (topic, image) pair with a trained model.

    ``model`` is an MlpModel or a path to a saved one. ``caption`` is raw
    text (or None when the model has no caption segment); ``visual`` is the
    image's visual vector (or None when the model has no visual segment).
    """
    if isinstance(model, (str, Path)):
        model = load_model(model)
    fc = model_feature_config(model)
    if fc.use_visual != (visual is not None):
        raise ConfigError(f"model uses features {fc.name}: visual vector "
                          f"{'required' if fc.use_visual else 'not accepted'}")
    if fc.use_caption != (caption is not None):
        raise ConfigError(f"model uses features {fc.name}: caption "
                          f"{'required' if fc.use_caption else 'not accepted'}")
    if table.dimension != fc.text_dim:
        raise ConfigError(f"embeddings have dimension {table.dimension}, model expects {fc.text_dim}")
    terms = list(topic_terms)
    if not terms:
        raise ValueError("topic needs at least one term")
    topic_vec = table.mean_pool(terms)[0]
    caption_vec = None
    if fc.use_caption:
        tokens = tokenize(caption)
        caption_vec = table.mean_pool(tokens)[0] if tokens else np.zeros(table.dimension)
    x = build_input(topic_vec, caption_vec, visual, fc)
    return float(predict(model, x))


def _median_time(fn, trials):
    """Median per-call seconds over ``trials`` batches sized to run >= 0.2 s each."""
    timer = timeit.Timer(fn)
    loops, _ = timer.autorange()
    return statistics.median(timer.repeat(repeat=trials, number=loops)) / loops


def loglog_slope(sizes, times):
    return float(np.polyfit(np.log(sizes), np.log(times), 1)[0])


@dataclass
class BenchmarkResult:
    rows: list  # (task, backend, size, median seconds)
    slopes: dict  # (task, backend) -> fitted log-log slope

    def to_tsv(self):
        lines = ["task\tbackend\tsize\tseconds"]
        lines += [f"{t}\t{b}\t{n}\t{s:.6g}" for t, b, n, s in self.rows]
        lines += ["", "task\tbackend\tloglog_slope"]
        lines += [f"{t}\t{b}\t{s:.4f}" for (t, b), s in self.slopes.items()]
        return "\n".join(lines) + "\n"


def benchmark_scaling(dnn_sizes=(1000, 2000, 4000, 8000, 16000),
                      ppr_sizes=(250, 500, 1000, 2000, 4000), trials=3, seed=0,
                      backends=None, text_dim=300, visual_dim=1000):
    """Time DNN batch scoring against Global PPR graph construction and iteration.

    Candidate pools are random. Every available kernel backend is timed for
    the graph work so compiled and numpy kernels can be compared.
    """
    for sizes in (dnn_sizes, ppr_sizes):
        if any(n < 2 for n in sizes) or list(sizes) != sorted(sizes):
            raise ValueError("pool sizes must be >= 2 and ascending")
    rng = np.random.default_rng(seed)
    backends = list(backends or kernels.BACKENDS)
    rows, slopes = [], {}
    fc = FeatureConfig(True, True, text_dim, visual_dim)
    model = init_model(fc.input_dim, seed)

    def random_inputs(n):
        text = rng.normal(size=(n, 2 * text_dim)) / np.sqrt(text_dim)
        vis = rng.dirichlet(np.full(visual_dim, 0.05), size=n)
        return np.hstack([text, vis])

    X_all = random_inputs(max(dnn_sizes))
    times = []
    for n in dnn_sizes:
        X = X_all[:n]
        t = _median_time(lambda: predict_batch(model, X), trials)
        rows.append(("dnn-score", "numpy", n, t))
        times.append(t)
    slopes[("dnn-score", "numpy")] = loglog_slope(dnn_sizes, times)

    P_all = random_inputs(max(ppr_sizes))[:, text_dim:]  # caption || visual
    for backend in backends:
        build_times, iter_times = [], []
        for n in ppr_sizes:
            P = np.ascontiguousarray(P_all[:n])
            build_times.append(_median_time(lambda: kernels.cosine_graph(P, backend), trials))
            W = kernels.cosine_graph(P, backend)
            T, dangling = transition_matrix(W)
            p = np.full(n, 1.0 / n)
            iter_times.append(_median_time(
                lambda: kernels.ppr_iterate(T, dangling, p, 0.85, 1e-10, 200, backend), trials))
            rows.append(("ppr-graph", backend, n, build_times[-1]))
            rows.append(("ppr-iterate", backend, n, iter_times[-1]))
        slopes[("ppr-graph", backend)] = loglog_slope(ppr_sizes, build_times)
        slopes[("ppr-iterate", backend)] = loglog_slope(ppr_sizes, iter_times)
    return BenchmarkResult(rows, slopes)


def write_text(path, text):
    Path(path).write_text(text, encoding="utf-8")
