// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsearch/corpus.hpp"
#include "convsearch/cqr.hpp"
#include "convsearch/fusion.hpp"
#include "convsearch/index.hpp"
#include "convsearch/metrics.hpp"
#include "convsearch/ranked_list.hpp"
#include "convsearch/tokenizer.hpp"

namespace convsearch {

/// A method name from the closed set: raw, concat, concat-pos, hqe,
/// hqe-pos, or external:<name> for a rewrite file registered under <name>.
struct MethodSpec {
    CqrMethod method = CqrMethod::raw;
    std::string external;  // only for CqrMethod::external

    /// Throws ValidationError for names outside the set.
    [[nodiscard]] static MethodSpec parse(std::string_view name);
    [[nodiscard]] std::string name() const;
    /// Name usable in file names and run tags (':' becomes '-').
    [[nodiscard]] std::string file_stem() const;

    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

enum class FusionMode { none, early, late };

[[nodiscard]] FusionMode parse_fusion_mode(std::string_view name);
[[nodiscard]] std::string_view to_string(FusionMode mode) noexcept;

/// Everything needed to reproduce one experiment. See README for the JSON
/// schema. Relative paths in a config file resolve against its directory.
struct ExperimentConfig {
    std::filesystem::path corpus;
    PassageFormat corpus_format = PassageFormat::tsv;
    std::filesystem::path topics;
    std::filesystem::path qrels;   // optional; no metrics without it
    std::filesystem::path pos;     // optional; needed for *-pos methods
    std::map<std::string, std::filesystem::path> rewrites;       // external name -> TSV
    std::map<std::string, std::filesystem::path> rerank_scores;  // method name -> TSV

    std::vector<std::string> methods;
    TokenizerOptions tokenizer;
    Bm25Params bm25;
    HqeParams hqe;
    HqeAblation ablation;
    std::size_t concat_window = 9;
    std::size_t retrieval_depth = 1000;
    std::size_t rerank_depth = 1000;

    FusionMode fusion_mode = FusionMode::none;
    std::vector<std::string> fusion_methods;
    std::string designated;  // early fusion re-ranks with this method's scores; empty = no re-ranking
    RrfParams rrf;
    std::size_t fusion_depth = kDefaultFusionDepth;

    std::vector<MetricSpec> metrics = default_metrics();
    std::filesystem::path output_dir = "out";
    std::filesystem::path cache_dir;  // empty = no disk cache
    std::size_t threads = 0;          // 0 = hardware concurrency

    /// Parses a JSON config. `overrides` are `dotted.key=value` pairs
    /// applied before validation; values parse as JSON, falling back to a
    /// plain string. Unknown keys are ValidationErrors.
    [[nodiscard]] static ExperimentConfig parse(std::string_view json_text, const std::filesystem::path& base_dir,
                                                std::span<const std::string> overrides = {});
    [[nodiscard]] static ExperimentConfig load(const std::filesystem::path& path,
                                               std::span<const std::string> overrides = {});

    /// Checks method names, parameter ranges and that every referenced file
    /// exists. Throws ValidationError; does no other work.
    void validate() const;

    /// Sorted-key JSON with every field spelled out.
    [[nodiscard]] std::string canonical_json() const;

    /// 16 hex digits over the canonical JSON and the bytes of every input
    /// file.
    [[nodiscard]] std::string hash() const;
};

struct StageResult {
    std::string method;  // method name, or "fusion"
    std::string stage;   // first-stage, reranked, early-fusion, late-fusion
    Run run;
    std::optional<MetricReport> report;
};

struct ExperimentResult {
    std::string config_hash;
    std::map<std::string, std::vector<ReformulatedQuery>> queries;  // by method name
    std::vector<StageResult> stages;

    [[nodiscard]] const StageResult* find(std::string_view method, std::string_view stage) const;
};

struct GridSpec {
    std::string method = "hqe";  // hqe, hqe-pos, concat or concat-pos
    std::vector<double> r_topic;
    std::vector<double> r_sub;
    std::vector<double> eta;
    std::vector<std::size_t> m_window;  // concat methods sweep this only
};

struct GridRow {
    HqeParams params;  // m_window doubles as the concat window
    double recall = 0.0;
    double map = 0.0;
};

/// Loaded data, index and keyword cache shared by every run of a config.
class Workspace {
  public:
    /// Validates the config, then loads inputs and builds (or loads from the
    /// disk cache) the index.
    explicit Workspace(ExperimentConfig config);
    ~Workspace();

    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
    [[nodiscard]] const InvertedIndex& index() const noexcept { return *index_; }
    [[nodiscard]] const std::vector<Session>& sessions() const noexcept { return sessions_; }
    [[nodiscard]] const Qrels* qrels() const noexcept { return qrels_ ? &*qrels_ : nullptr; }
    [[nodiscard]] const MaxScoreCache& scorer() const noexcept { return *scorer_; }

    /// Reformulates every turn of every session, sessions in file order.
    [[nodiscard]] std::vector<ReformulatedQuery> reformulate(const MethodSpec& method, const HqeParams& hqe,
                                                             std::size_t concat_window) const;

    /// First-stage BM25 retrieval for each query, in input order.
    [[nodiscard]] Run retrieve(std::span<const ReformulatedQuery> queries) const;

    /// All configured methods, re-ranking and fusion. Reads and writes the
    /// first-stage cache when one is configured.
    [[nodiscard]] ExperimentResult run() const;

    /// Cartesian sweep over the grid axes (empty axis = config value).
    /// Combinations with r_topic <= r_sub are skipped. Rows are sorted by
    /// recall, then MAP (both descending), then parameters ascending.
    [[nodiscard]] std::vector<GridRow> grid(const GridSpec& spec) const;

    /// Persists the keyword cache when a cache dir is configured.
    void save_cache() const;

  private:
    [[nodiscard]] RerankScores load_rerank(const std::string& method) const;

    ExperimentConfig config_;
    Tokenizer tokenizer_;
    std::unique_ptr<InvertedIndex> index_;
    std::unique_ptr<MaxScoreCache> scorer_;
    std::vector<Session> sessions_;
    std::optional<Qrels> qrels_;
    PosAnnotations pos_;
    std::map<std::string, ExternalRewrites> rewrites_;
    std::string index_key_;
};

/// Writes runs/, rewrites/, metrics.csv, per_query.csv, metrics.txt,
/// config.json and experiment.log under `dir`.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const std::filesystem::path& dir);

/// Workspace + run + outputs under config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_grid_csv(std::ostream& out, std::span<const GridRow> rows);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// FNV-1a 64-bit, for cache keys.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t value);

}  // namespace convsearch
