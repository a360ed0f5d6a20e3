"""End-to-end pipeline: sparse retrieval, dense rerank, calibration, evaluation.

For each query: expand it with cached pseudo-references and retrieve the
top-k candidates with BM25, rerank those candidates with the pooled query
embedding, then calibrate the embedding with relevance feedback and rank once
more. All three rankings are kept for analysis.
"""

from dataclasses import dataclass, field, asdict

from queryboost.calibration import CalibrationConfig, build_feedback_sets, calibrate, final_rank
from queryboost.corpus import Document, InvertedIndex
from queryboost.embedding import EmbeddingProvider
from queryboost.evaluation import EvalReport, Qrels, Ranking, evaluate_run
from queryboost.generation import ReferenceCache, ReferenceSet
from queryboost.rerank import DocumentEmbeddingCache, embed_query, rerank
from queryboost.sparse import BM25Params, ReweightConfig, SparseQuery, bm25_search, build_sparse_query
from queryboost.tokenizer import tokenize

SWEEP_AXES = ("beta", "t", "alpha", "n_refs", "strategy")


@dataclass(frozen=True)
class PipelineConfig:
    bm25: BM25Params = field(default_factory=BM25Params)
    reweight: ReweightConfig = field(default_factory=ReweightConfig.adaptive)
    strategy: str = "contex_pool"
    calibration: CalibrationConfig | None = field(default_factory=CalibrationConfig)
    retrieve_k: int = 100
    eval_k: int = 10
    exponential_gain: bool = False

    def __post_init__(self):
        if self.retrieve_k < self.eval_k:
            raise ValueError(
                f"retrieve_k ({self.retrieve_k}) must be >= eval_k ({self.eval_k})")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PipelineRankings:
    """The three per-query rankings: sparse, dense pre-calibration, final."""

    bm25: Ranking
    pre: Ranking
    post: Ranking


def run_query_pipeline(query_id: str, query: str, index: InvertedIndex,
                       doc_store: dict[str, Document], provider: EmbeddingProvider,
                       refs: ReferenceSet | None,
                       cfg: PipelineConfig) -> PipelineRankings:
    """Run the full pipeline for one query.

    With no references the sparse stage uses the plain query and the dense
    stage the raw query embedding (the no-expansion baseline); calibration is
    skipped because there is no positive feedback to build from.
    """
    if refs is not None and refs.references:
        sq = build_sparse_query(query, refs.references, cfg.reweight)
    else:
        refs = None
        sq = SparseQuery(tokens=tuple(tokenize(query)), query_repeats=1,
                         num_references=0)

    i_bm25 = bm25_search(index, cfg.bm25, sq, cfg.retrieve_k)
    if not i_bm25:
        empty = Ranking(query_id=query_id, items=())
        return PipelineRankings(bm25=empty, pre=empty, post=empty)

    candidates = [doc_store[doc_id] for doc_id, _ in i_bm25]
    doc_cache = DocumentEmbeddingCache(provider)

    q_emb = embed_query(provider, query, refs, cfg.strategy)
    i_pre = rerank(provider, q_emb, candidates, doc_cache)

    if cfg.calibration is not None and refs is not None:
        fb = build_feedback_sets(i_bm25, i_pre, refs, doc_store, cfg.calibration)
        calibrated = calibrate(provider, query, fb, cfg.calibration)
        i_post = final_rank(provider, calibrated, candidates, doc_cache)
    else:
        i_post = i_pre

    return PipelineRankings(
        bm25=Ranking(query_id=query_id, items=tuple(i_bm25)),
        pre=Ranking(query_id=query_id, items=tuple(i_pre)),
        post=Ranking(query_id=query_id, items=tuple(i_post)))


def run_pipeline(queries: list[tuple[str, str]], index: InvertedIndex,
                 doc_store: dict[str, Document], provider: EmbeddingProvider,
                 cache: ReferenceCache, model_id: str, cfg: PipelineConfig,
                 n_refs: int | None = None,
                 require_refs: bool = True) -> list[PipelineRankings]:
    """Run the pipeline over a query set using cached references.

    ``n_refs`` restricts each cached set to its first j references; 0 means
    the no-expansion baseline. A cache miss is an error naming the query
    unless ``require_refs`` is off.
    """
    results = []
    for query_id, query in queries:
        if n_refs == 0:
            refs = None
        else:
            refs = cache.get(query_id, model_id)
            if refs is None:
                if require_refs:
                    raise KeyError(
                        f"no cached references for query {query_id!r} "
                        f"(model {model_id!r})")
            elif n_refs is not None:
                if len(refs.references) < n_refs:
                    raise ValueError(
                        f"query {query_id!r}: need {n_refs} cached references, "
                        f"have {len(refs.references)}")
                refs = refs.first(n_refs)
        results.append(run_query_pipeline(query_id, query, index, doc_store,
                                          provider, refs, cfg))
    return results


@dataclass
class KeywordOverlapReport:
    """Highest-idf token sets of ground-truth vs pseudo-reference text."""

    query_id: str
    gt_top: list[str]
    pse_top: list[str]
    query_tokens: list[str]
    gt_pse_overlap: int
    gt_query_overlap: int

    def to_dict(self) -> dict:
        return asdict(self)


def top_idf_tokens(text: str, index: InvertedIndex, m: int) -> list[str]:
    """The m distinct tokens of text with highest idf (ties by token)."""
    from queryboost.sparse import idf

    tokens = sorted(set(tokenize(text)))
    tokens.sort(key=lambda t: (-idf(index, t), t))
    return tokens[:m]


def keyword_overlap(query: str, refs: ReferenceSet, gt_docs: list[Document],
                    index: InvertedIndex, m: int = 10) -> KeywordOverlapReport:
    """Compare the top-m idf vocabularies of ground-truth docs and references."""
    if not gt_docs:
        raise ValueError("gt_docs must be non-empty")
    gt_text = " ".join(d.indexed_text("title_plus_text") for d in gt_docs)
    pse_text = " ".join(refs.references)

    gt_top = top_idf_tokens(gt_text, index, m)
    pse_top = top_idf_tokens(pse_text, index, m)
    q_tokens = sorted(set(tokenize(query)))

    return KeywordOverlapReport(
        query_id=refs.query_id, gt_top=gt_top, pse_top=pse_top,
        query_tokens=q_tokens,
        gt_pse_overlap=len(set(gt_top) & set(pse_top)),
        gt_query_overlap=len(set(gt_top) & set(q_tokens)))


def _config_for_value(base: PipelineConfig, axis: str, value) -> tuple[PipelineConfig, int | None]:
    """Derive the pipeline config (and reference count) for one sweep point."""
    from dataclasses import replace

    if axis == "beta":
        return replace(base, reweight=ReweightConfig.adaptive(beta=float(value))), None
    if axis == "t":
        return replace(base, reweight=ReweightConfig.constant(t=int(value))), None
    if axis == "alpha":
        cal = base.calibration or CalibrationConfig()
        return replace(base, calibration=replace(cal, alpha=float(value))), None
    if axis == "strategy":
        return replace(base, strategy=str(value)), None
    if axis == "n_refs":
        return base, int(value)
    raise ValueError(f"unknown sweep axis: {axis!r} (expected one of {SWEEP_AXES})")


def sweep(axis: str, values: list, base_cfg: PipelineConfig,
          index: InvertedIndex, doc_store: dict[str, Document],
          provider: EmbeddingProvider, cache: ReferenceCache, model_id: str,
          queries: list[tuple[str, str]], qrels: Qrels) -> list[tuple[object, EvalReport]]:
    """Evaluate the final ranking at each value along one ablation axis."""
    if axis == "n_refs":
        needed = max(int(v) for v in values)
        for query_id, _ in queries:
            refs = cache.get(query_id, model_id)
            if needed > 0 and (refs is None or len(refs.references) < needed):
                have = 0 if refs is None else len(refs.references)
                raise ValueError(
                    f"query {query_id!r}: sweep needs {needed} cached references, "
                    f"have {have}")

    results = []
    for value in values:
        cfg, n_refs = _config_for_value(base_cfg, axis, value)
        rankings = run_pipeline(queries, index, doc_store, provider, cache,
                                model_id, cfg, n_refs=n_refs)
        report = evaluate_run([r.post for r in rankings], qrels, cfg.eval_k,
                              config={"axis": axis, "value": value, **cfg.to_dict()},
                              exponential_gain=cfg.exponential_gain)
        results.append((value, report))
    return results


def format_sweep_table(axis: str, results: list[tuple[object, EvalReport]]) -> str:
    """Aligned text table of sweep results."""
    lines = [f"{axis:>12}  {'mean_ndcg':>10}  {'evaluated':>9}  fingerprint"]
    for value, report in results:
        lines.append(f"{str(value):>12}  {report.mean:>10.4f}  "
                     f"{report.num_evaluated:>9d}  {report.fingerprint}")
    return "\n".join(lines)
