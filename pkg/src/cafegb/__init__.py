"""Chunk-wise aggregated gradient-boosting feature selection toolkit."""

from .analysis import (RedundancyReport, StabilityReport, StabilityRow,
                       WilcoxonResult, correlation_stats, jaccard, kscan,
                       pearson, pearson_flag, select_budget, stability,
                       wilcoxon_signed_rank)
from .chunker import ChunkPlan, materialize_chunk, plan_chunks
from .data import (DataError, DatasetMatrix, SplitSpec, StandardScaler,
                   SyntheticSpec, fit_scaler, generate_synthetic, load_cache,
                   load_csv, load_csv_with_mask, reimpute, save_cache,
                   save_csv, stratified_split)
from .evaluate import (LinearModel, LogRegParams, MetricsReport, accuracy,
                       compute_metrics, f1, mcc, pr_auc, roc_auc,
                       run_experiment, train_logreg)
from .gbdt import (GbdtModel, GbdtParams, Tree, gain_importance,
                   model_from_json, model_to_json, predict_margin,
                   predict_proba, train, write_importance_csv)
from .profiler import StageProfile, profile_stage
from .ranking import (CafeGbConfig, FeatureRanking, aggregate, rank,
                      ranking_records, run, top_k, with_seed)
from .treeshap import (ShapRow, ShapSummary, expected_margin, shap_matrix,
                       shap_summary, tree_shap)

__version__ = "0.1.0"
