// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convsearch/analysis.hpp"
#include "convsearch/corpus.hpp"
#include "convsearch/cqr.hpp"
#include "convsearch/error.hpp"
#include "convsearch/experiment.hpp"
#include "convsearch/fusion.hpp"
#include "convsearch/index.hpp"
#include "convsearch/metrics.hpp"
#include "convsearch/run_io.hpp"
#include "convsearch/stats.hpp"

namespace convsearch::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int digits = 4)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// Writes to `path`, or to `fallback` when the path is empty.
class Output {
  public:
    Output(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            if (fs::path(path).has_parent_path()) {
                fs::create_directories(fs::path(path).parent_path());
            }
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) {
                throw Error("cannot write " + path);
            }
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

  private:
    std::ofstream file_;
    std::ostream* stream_;
};

struct Bm25Opts {
    double k1 = Bm25Params{}.k1;
    double b = Bm25Params{}.b;

    void add(CLI::App* cmd)
    {
        cmd->add_option("--k1", k1, "BM25 k1")->capture_default_str();
        cmd->add_option("--b", b, "BM25 b")->capture_default_str();
    }
    [[nodiscard]] Bm25Params params() const
    {
        Bm25Params p{k1, b};
        p.validate();
        return p;
    }
};

// ---- index ---------------------------------------------------------------

struct IndexBuildOpts {
    std::string corpus;
    std::string format = "tsv";
    std::string out;
    bool stem = false;
    bool stopwords = false;
};

void index_build(const IndexBuildOpts& o, std::ostream& out)
{
    const auto index = build_index_from_file(o.corpus, parse_passage_format(o.format), {o.stem, o.stopwords});
    index.save(o.out);
    out << "indexed " << index.doc_count() << " passages, " << index.vocabulary_size() << " terms, "
        << index.total_tokens() << " tokens -> " << o.out << '\n';
}

void index_stats(const std::string& path, std::ostream& out)
{
    const auto index = InvertedIndex::load(path);
    out << "documents\t" << index.doc_count() << '\n'
        << "terms\t" << index.vocabulary_size() << '\n'
        << "tokens\t" << index.total_tokens() << '\n'
        << "avg_doc_len\t" << format_score(index.avg_doc_len()) << '\n'
        << "stem\t" << (index.tokenizer_options().stem ? "yes" : "no") << '\n'
        << "stopwords\t" << (index.tokenizer_options().remove_stopwords ? "removed" : "kept") << '\n';
}

// ---- reformulate ---------------------------------------------------------

struct ReformulateOpts {
    std::string topics;
    std::string method = "raw";
    std::string index;
    std::string pos;
    std::string rewrites;
    std::string preset = "retrieval";
    std::optional<double> r_topic, r_sub, eta;
    std::optional<std::size_t> m_window;
    std::size_t concat_window = 9;
    bool no_topic = false, no_subtopic = false, no_qpp = false, no_term_weight = false;
    bool stem = false, stopwords = false;
    Bm25Opts bm25;
    std::string out;
};

void reformulate(const ReformulateOpts& o, std::ostream& out)
{
    ReformulateOptions options;
    options.method = parse_cqr_method(o.method);
    if (o.preset == "retrieval") {
        options.hqe = HqeParams::for_retrieval();
    } else if (o.preset == "ranking") {
        options.hqe = HqeParams::for_ranking();
    } else {
        throw ValidationError("unknown preset '" + o.preset + "' (expected retrieval or ranking)");
    }
    if (o.r_topic) options.hqe.r_topic = *o.r_topic;
    if (o.r_sub) options.hqe.r_sub = *o.r_sub;
    if (o.eta) options.hqe.eta = *o.eta;
    if (o.m_window) options.hqe.m_window = *o.m_window;
    options.hqe.validate();
    options.ablation = {!o.no_topic, !o.no_subtopic, !o.no_qpp, !o.no_term_weight};
    options.concat_window = o.concat_window;

    const auto sessions = load_sessions(o.topics);
    PosAnnotations pos;
    if (uses_pos(options.method)) {
        if (o.pos.empty()) {
            throw ValidationError("method " + o.method + " needs --pos");
        }
        pos = load_pos_annotations(o.pos);
        options.pos = &pos;
    }
    ExternalRewrites rewrites;
    if (options.method == CqrMethod::external) {
        if (o.rewrites.empty()) {
            throw ValidationError("method external needs --rewrites");
        }
        rewrites = load_external_rewrites(o.rewrites);
        options.rewrites = &rewrites;
    }
    std::optional<InvertedIndex> index;
    std::optional<MaxScoreCache> scorer;
    Tokenizer tokenizer({o.stem, o.stopwords});
    if (!o.index.empty()) {
        index.emplace(InvertedIndex::load(o.index));
        tokenizer = index->tokenizer();
        scorer.emplace(*index, o.bm25.params());
    } else if (options.method == CqrMethod::hqe || options.method == CqrMethod::hqe_pos) {
        throw ValidationError("method " + o.method + " needs --index");
    }

    std::vector<ReformulatedQuery> all;
    for (const auto& session : sessions) {
        auto queries = reformulate_session(session, options, tokenizer, scorer ? &*scorer : nullptr);
        std::move(queries.begin(), queries.end(), std::back_inserter(all));
    }
    if (o.out.empty()) {
        for (const auto& q : all) {
            out << q.qid << '\t' << q.display_text << '\n';
        }
    } else {
        write_rewrites(o.out, all);
    }
}

// ---- retrieve ------------------------------------------------------------

struct RetrieveOpts {
    std::string index;
    std::string queries;
    std::size_t depth = 1000;
    std::string tag = "bm25";
    Bm25Opts bm25;
    std::string out;
};

void retrieve(const RetrieveOpts& o, std::ostream& out)
{
    if (o.depth == 0) {
        throw ValidationError("--depth must be positive");
    }
    const auto index = InvertedIndex::load(o.index);
    const auto params = o.bm25.params();
    const auto tokenizer = index.tokenizer();
    const auto queries = load_external_rewrites(o.queries);
    std::vector<std::string> qids;
    for (const auto& [qid, _] : queries) {
        qids.push_back(qid);
    }
    Run run(qids.size());
    parallel_for(qids.size(), 0, [&](std::size_t i) {
        run[i] = retrieve_topk(index, params, tokenizer(queries.at(qids[i])), o.depth, qids[i]);
    });
    Output dest(o.out, out);
    write_run(*dest, run, o.tag);
}

// ---- fuse / rerank -------------------------------------------------------

struct FuseOpts {
    std::vector<std::string> runs;
    double k = RrfParams{}.k;
    std::size_t depth = kDefaultFusionDepth;
    std::string rerank_scores;
    std::string tag = "rrf";
    std::string out;
};

void fuse(const FuseOpts& o, std::ostream& out)
{
    RrfParams params{o.k};
    params.validate();
    if (o.depth == 0) {
        throw ValidationError("--depth must be positive");
    }
    std::vector<Run> runs;
    for (const auto& path : o.runs) {
        runs.push_back(read_run(fs::path(path)));
    }
    Run fused = rrf_fuse_runs(runs, params, o.depth);
    if (!o.rerank_scores.empty()) {
        fused = rerank_run(fused, RerankScores::load(o.rerank_scores));
    }
    Output dest(o.out, out);
    write_run(*dest, fused, o.tag);
}

struct RerankOpts {
    std::string run;
    std::string scores;
    std::size_t depth = 1000;
    std::string tag = "rerank";
    std::string out;
};

void rerank_cmd(const RerankOpts& o, std::ostream& out)
{
    Run run = read_run(fs::path(o.run));
    for (auto& list : run) {
        if (list.entries.size() > o.depth) {
            list.entries.resize(o.depth);
        }
    }
    Output dest(o.out, out);
    write_run(*dest, rerank_run(run, RerankScores::load(o.scores)), o.tag);
}

// ---- eval / compare ------------------------------------------------------

struct EvalOpts {
    std::string run;
    std::string qrels;
    std::string metrics = "map,ndcg@3,ndcg@1,recall@1000";
    bool per_query = false;
    bool csv = false;
};

void eval(const EvalOpts& o, std::ostream& out)
{
    const auto metrics = MetricSpec::parse_list(o.metrics);
    const auto qrels = Qrels::load(o.qrels);
    const auto report = evaluate(read_run(fs::path(o.run)), qrels, metrics);
    if (o.csv) {
        out << "qid,metric,value\n";
        if (o.per_query) {
            for (std::size_t q = 0; q < report.qids.size(); ++q) {
                for (std::size_t m = 0; m < metrics.size(); ++m) {
                    out << report.qids[q] << ',' << metrics[m].name() << ',' << format_score(report.values[q][m])
                        << '\n';
                }
            }
        }
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            out << "all," << metrics[m].name() << ',' << format_score(report.means[m]) << '\n';
        }
        return;
    }
    // trec_eval layout: metric, qid, value.
    if (o.per_query) {
        for (std::size_t q = 0; q < report.qids.size(); ++q) {
            for (std::size_t m = 0; m < metrics.size(); ++m) {
                out << std::left << std::setw(16) << metrics[m].name() << '\t' << report.qids[q] << '\t'
                    << fixed(report.values[q][m]) << '\n';
            }
        }
    }
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        out << std::left << std::setw(16) << metrics[m].name() << "\tall\t" << fixed(report.means[m]) << '\n';
    }
    out << std::left << std::setw(16) << "num_q" << "\tall\t" << report.qids.size() << '\n';
}

struct CompareOpts {
    std::string baseline;
    std::string run;
    std::string qrels;
    std::string metrics = "map,ndcg@3,ndcg@1,recall@1000";
    double epsilon = kDefaultTieEpsilon;
};

void compare(const CompareOpts& o, std::ostream& out)
{
    const auto metrics = MetricSpec::parse_list(o.metrics);
    const auto qrels = Qrels::load(o.qrels);
    const auto base = evaluate(read_run(fs::path(o.baseline)), qrels, metrics);
    const auto sys = evaluate(read_run(fs::path(o.run)), qrels, metrics);
    out << "metric\tbaseline\tsystem\twin/tie/loss\tt\tp\n";
    for (const auto& m : metrics) {
        const auto a = sys.column(m.name());
        const auto b = base.column(m.name());
        const auto wtl = win_tie_loss(a, b, o.epsilon);
        out << m.name() << '\t' << fixed(base.mean(m.name())) << '\t' << fixed(sys.mean(m.name())) << '\t'
            << wtl.win << '/' << wtl.tie << '/' << wtl.loss;
        if (a.size() >= 2) {
            const auto t = paired_t_test(a, b);
            out << '\t' << fixed(t.t) << '\t' << fixed(t.p_value);
        } else {
            out << "\t-\t-";
        }
        out << '\n';
    }
}

// ---- analyze -------------------------------------------------------------

struct JaccardOpts {
    std::string run;
    std::string reference;
    std::string qrels;
    std::size_t depth = 1000;
};

void analyze_jaccard(const JaccardOpts& o, std::ostream& out)
{
    const Run run = read_run(fs::path(o.run));
    if (o.reference.empty()) {
        out << "turn\tmean_jaccard\tsessions\n";
        for (const auto& t : turn_similarity(run, o.depth)) {
            out << t.turn << '\t' << fixed(t.mean_jaccard) << '\t' << t.sessions << '\n';
        }
        return;
    }
    const Run reference = read_run(fs::path(o.reference));
    std::optional<Qrels> qrels;
    if (!o.qrels.empty()) {
        qrels = Qrels::load(o.qrels);
    }
    out << "session\tmean_jaccard\tmean_relative_recall\tturns\tjudged_turns\n";
    for (const auto& s : session_similarity(run, reference, qrels ? &*qrels : nullptr, o.depth)) {
        out << s.session << '\t' << fixed(s.mean_jaccard) << '\t' << fixed(s.mean_relative_recall) << '\t'
            << s.turns << '\t' << s.judged_turns << '\n';
    }
}

struct BleuOpts {
    std::string hyp;
    std::string ref;
    int max_order = 4;
};

void analyze_bleu(const BleuOpts& o, std::ostream& out)
{
    const auto hyps = load_external_rewrites(o.hyp);
    const auto refs = load_external_rewrites(o.ref);
    std::vector<TokenStream> h;
    std::vector<TokenStream> r;
    for (const auto& [qid, text] : refs) {
        auto it = hyps.find(qid);
        if (it == hyps.end()) {
            throw ValidationError("hypothesis file has no query " + qid);
        }
        h.push_back(tokenize(it->second));
        r.push_back(tokenize(text));
    }
    out << "BLEU\t" << fixed(corpus_bleu(h, r, o.max_order), 2) << "\tqueries\t" << r.size() << '\n';
}

// ---- experiment / grid ---------------------------------------------------

struct ExperimentOpts {
    std::string config;
    std::vector<std::string> overrides;
};

void experiment(const ExperimentOpts& o, std::ostream& out)
{
    const auto config = ExperimentConfig::load(o.config, o.overrides);
    const auto result = run_experiment(config);
    out << "config_hash " << result.config_hash << '\n';
    std::ifstream table(config.output_dir / "metrics.txt");
    if (table) {
        out << table.rdbuf();
    }
    out << "outputs in " << config.output_dir.string() << '\n';
}

struct GridOpts {
    ExperimentOpts base;
    GridSpec spec;
    std::string out;
};

void grid(const GridOpts& o, std::ostream& out)
{
    Workspace ws(ExperimentConfig::load(o.base.config, o.base.overrides));
    const auto rows = ws.grid(o.spec);
    Output dest(o.out, out);
    write_grid_csv(*dest, rows);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Conversational passage retrieval: indexing, query reformulation, fusion and evaluation",
                 "convsearch"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "convsearch 0.1.0");
    std::function<void()> action;

    auto* index_cmd = app.add_subcommand("index", "Build or inspect a BM25 index");
    index_cmd->require_subcommand(1);
    IndexBuildOpts ib;
    auto* build = index_cmd->add_subcommand("build", "Index a passage collection");
    build->add_option("--corpus,--input", ib.corpus, "Passage file")->required()->check(CLI::ExistingFile);
    build->add_option("--format", ib.format, "tsv or jsonl")->capture_default_str();
    build->add_option("--out,--output,-o", ib.out, "Index file to write")->required();
    build->add_flag("--stem", ib.stem, "Porter-stem tokens");
    build->add_flag("--stopwords", ib.stopwords, "Drop English stopwords");
    build->callback([&] { action = [&] { index_build(ib, out); }; });
    std::string stats_path;
    auto* stats = index_cmd->add_subcommand("stats", "Print index statistics");
    stats->add_option("index", stats_path, "Index file")->required()->check(CLI::ExistingFile);
    stats->callback([&] { action = [&] { index_stats(stats_path, out); }; });

    ReformulateOpts rf;
    auto* ref = app.add_subcommand("reformulate", "Rewrite every turn of a topic file");
    ref->add_option("--topics", rf.topics, "Topic JSON")->required()->check(CLI::ExistingFile);
    ref->add_option("--method", rf.method, "raw|concat|concat-pos|hqe|hqe-pos|external")->capture_default_str();
    ref->add_option("--index", rf.index, "Index file (needed by hqe)")->check(CLI::ExistingFile);
    ref->add_option("--pos", rf.pos, "POS annotations JSONL")->check(CLI::ExistingFile);
    ref->add_option("--rewrites", rf.rewrites, "Rewrite TSV for method external")->check(CLI::ExistingFile);
    ref->add_option("--preset", rf.preset, "HQE defaults: retrieval or ranking")->capture_default_str();
    ref->add_option("--r-topic", rf.r_topic, "Topic keyword threshold");
    ref->add_option("--r-sub", rf.r_sub, "Subtopic keyword threshold");
    ref->add_option("--eta", rf.eta, "Ambiguity threshold on the top-1 score");
    ref->add_option("--m-window", rf.m_window, "Subtopic history window");
    ref->add_option("--concat-window", rf.concat_window, "Turns of history for concat")->capture_default_str();
    ref->add_flag("--no-topic", rf.no_topic, "Ablation: drop topic keywords");
    ref->add_flag("--no-subtopic", rf.no_subtopic, "Ablation: drop subtopic keywords");
    ref->add_flag("--no-qpp", rf.no_qpp, "Ablation: always add subtopic keywords");
    ref->add_flag("--no-term-weight", rf.no_term_weight, "Ablation: keep each term once");
    ref->add_flag("--stem", rf.stem, "Stem tokens (ignored with --index)");
    ref->add_flag("--stopwords", rf.stopwords, "Drop stopwords (ignored with --index)");
    rf.bm25.add(ref);
    ref->add_option("--out,-o", rf.out, "Output TSV (default stdout)");
    ref->callback([&] { action = [&] { reformulate(rf, out); }; });

    RetrieveOpts rt;
    auto* ret = app.add_subcommand("retrieve", "BM25 retrieval for a query TSV");
    ret->add_option("--index", rt.index, "Index file")->required()->check(CLI::ExistingFile);
    ret->add_option("--queries", rt.queries, "qid<TAB>text")->required()->check(CLI::ExistingFile);
    ret->add_option("--depth,-k", rt.depth, "Results per query")->capture_default_str();
    ret->add_option("--tag", rt.tag, "Run tag")->capture_default_str();
    rt.bm25.add(ret);
    ret->add_option("--out,-o", rt.out, "Run file (default stdout)");
    ret->callback([&] { action = [&] { retrieve(rt, out); }; });

    FuseOpts fu;
    auto* fus = app.add_subcommand("fuse", "Reciprocal rank fusion of runs");
    fus->add_option("--run,--runs", fu.runs, "Run files")->required()->check(CLI::ExistingFile);
    fus->add_option("--k", fu.k, "RRF constant")->capture_default_str();
    fus->add_option("--depth", fu.depth, "Fused list depth")->capture_default_str();
    fus->add_option("--rerank-scores", fu.rerank_scores, "Re-rank the fused run (early fusion)")
        ->check(CLI::ExistingFile);
    fus->add_option("--tag", fu.tag, "Run tag")->capture_default_str();
    fus->add_option("--out,-o", fu.out, "Run file (default stdout)");
    fus->callback([&] { action = [&] { fuse(fu, out); }; });

    RerankOpts rr;
    auto* rer = app.add_subcommand("rerank", "Reorder a run by external scores");
    rer->add_option("--run", rr.run, "Run file")->required()->check(CLI::ExistingFile);
    rer->add_option("--scores", rr.scores, "qid<TAB>doc_id<TAB>score")->required()->check(CLI::ExistingFile);
    rer->add_option("--depth", rr.depth, "Candidates kept per query")->capture_default_str();
    rer->add_option("--tag", rr.tag, "Run tag")->capture_default_str();
    rer->add_option("--out,-o", rr.out, "Run file (default stdout)");
    rer->callback([&] { action = [&] { rerank_cmd(rr, out); }; });

    EvalOpts ev;
    auto* eva = app.add_subcommand("eval", "Evaluate a run against qrels");
    eva->add_option("--run", ev.run, "Run file")->required()->check(CLI::ExistingFile);
    eva->add_option("--qrels", ev.qrels, "Qrels file")->required()->check(CLI::ExistingFile);
    eva->add_option("--metrics,-m", ev.metrics, "Comma-separated metrics")->capture_default_str();
    eva->add_flag("--per-query,-q", ev.per_query, "Also print per-query values");
    eva->add_flag("--csv", ev.csv, "CSV output");
    eva->callback([&] { action = [&] { eval(ev, out); }; });

    CompareOpts cp;
    auto* cmp = app.add_subcommand("compare", "Win/tie/loss and paired t-test against a baseline run");
    cmp->add_option("--baseline,--run-a", cp.baseline, "Baseline run")->required()->check(CLI::ExistingFile);
    cmp->add_option("--run,--run-b", cp.run, "System run")->required()->check(CLI::ExistingFile);
    cmp->add_option("--qrels", cp.qrels, "Qrels file")->required()->check(CLI::ExistingFile);
    cmp->add_option("--metrics,--metric,-m", cp.metrics, "Comma-separated metrics")->capture_default_str();
    cmp->add_option("--epsilon", cp.epsilon, "Tie tolerance")->capture_default_str();
    cmp->callback([&] { action = [&] { compare(cp, out); }; });

    auto* analyze = app.add_subcommand("analyze", "Run and query similarity analyses");
    analyze->require_subcommand(1);
    JaccardOpts ja;
    auto* jac = analyze->add_subcommand("jaccard", "Jaccard similarity of retrieved sets");
    jac->add_option("--run", ja.run, "Run file")->required()->check(CLI::ExistingFile);
    jac->add_option("--reference", ja.reference, "Reference run (per-session comparison)")
        ->check(CLI::ExistingFile);
    jac->add_option("--qrels", ja.qrels, "Qrels, for relative recall")->check(CLI::ExistingFile);
    jac->add_option("--depth", ja.depth, "Set depth")->capture_default_str();
    jac->callback([&] { action = [&] { analyze_jaccard(ja, out); }; });
    BleuOpts bl;
    auto* ble = analyze->add_subcommand("bleu", "Corpus BLEU of rewrites against references");
    ble->add_option("--hyp", bl.hyp, "Hypothesis rewrites TSV")->required()->check(CLI::ExistingFile);
    ble->add_option("--ref", bl.ref, "Reference rewrites TSV")->required()->check(CLI::ExistingFile);
    ble->add_option("--max-order", bl.max_order, "Largest n-gram order")->capture_default_str();
    ble->callback([&] { action = [&] { analyze_bleu(bl, out); }; });

    ExperimentOpts ex;
    auto* exp = app.add_subcommand("experiment", "Run a configured experiment end to end");
    exp->add_option("--config,-c", ex.config, "Config JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--set", ex.overrides, "Override a config key: dotted.key=value");
    exp->callback([&] { action = [&] { experiment(ex, out); }; });

    GridOpts gr;
    auto* grd = app.add_subcommand("grid", "Grid search over HQE parameters or the history window");
    grd->add_option("--config,-c", gr.base.config, "Config JSON")->required()->check(CLI::ExistingFile);
    grd->add_option("--set", gr.base.overrides, "Override a config key: dotted.key=value");
    grd->add_option("--method", gr.spec.method, "hqe|hqe-pos|concat|concat-pos")->capture_default_str();
    grd->add_option("--r-topic", gr.spec.r_topic, "Values to sweep")->delimiter(',');
    grd->add_option("--r-sub", gr.spec.r_sub, "Values to sweep")->delimiter(',');
    grd->add_option("--eta", gr.spec.eta, "Values to sweep")->delimiter(',');
    grd->add_option("--m-window", gr.spec.m_window, "Values to sweep")->delimiter(',');
    grd->add_option("--out,-o", gr.out, "CSV file (default stdout)");
    grd->callback([&] { action = [&] { grid(gr, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        action();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace convsearch::cli
