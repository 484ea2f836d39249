// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "convsearch/error.hpp"
#include "convsearch/run_io.hpp"

namespace convsearch {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- methods -------------------------------------------------------------

MethodSpec MethodSpec::parse(std::string_view name)
{
    constexpr std::string_view prefix = "external:";
    if (name.substr(0, prefix.size()) == prefix) {
        MethodSpec m{CqrMethod::external, std::string(name.substr(prefix.size()))};
        if (m.external.empty()) {
            throw ValidationError("method 'external:' needs a rewrite name");
        }
        return m;
    }
    CqrMethod method = parse_cqr_method(name);
    if (method == CqrMethod::external) {
        throw ValidationError("use external:<name> to select a rewrite file");
    }
    return {method, {}};
}

std::string MethodSpec::name() const
{
    if (method == CqrMethod::external) {
        return "external:" + external;
    }
    return std::string(to_string(method));
}

std::string MethodSpec::file_stem() const
{
    auto out = name();
    for (auto& c : out) {
        if (c == ':' || c == '/' || c == '\\' || c == ' ') {
            c = '-';
        }
    }
    return out;
}

FusionMode parse_fusion_mode(std::string_view name)
{
    if (name == "none") return FusionMode::none;
    if (name == "early") return FusionMode::early;
    if (name == "late") return FusionMode::late;
    throw ValidationError("unknown fusion mode '" + std::string(name) + "' (expected none, early, late)");
}

std::string_view to_string(FusionMode mode) noexcept
{
    switch (mode) {
    case FusionMode::none:
        return "none";
    case FusionMode::early:
        return "early";
    case FusionMode::late:
        return "late";
    }
    return "none";
}

// ---- hashing -------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept
{
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << value;
    return out.str();
}

namespace {

std::uint64_t hash_file(const fs::path& path, std::uint64_t seed = 0xcbf29ce484222325ULL)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::uint64_t h = seed;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
    }
    return h;
}

// ---- config JSON ---------------------------------------------------------

const std::set<std::string>& path_keys()
{
    static const std::set<std::string> keys{"corpus", "topics", "qrels", "pos", "output_dir", "cache_dir"};
    return keys;
}

[[noreturn]] void bad_key(const std::string& where, const std::string& key)
{
    throw ValidationError("unknown config key '" + where + key + "'");
}

template <typename T>
T get_as(const json& j, const std::string& key)
{
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key '" + key + "' has the wrong type");
    }
}

std::size_t get_size(const json& j, const std::string& key)
{
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ValidationError("config key '" + key + "' must be a non-negative integer");
    }
    return j.get<std::size_t>();
}

fs::path resolve(const fs::path& base, const std::string& value)
{
    if (value.empty()) {
        return {};
    }
    fs::path p(value);
    return (p.is_absolute() ? p : base / p).lexically_normal();
}

void apply_override(json& root, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override '" + assignment + "' is not key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    // A top-level path given on the command line is relative to the cwd.
    if (path_keys().count(key) != 0 && value.is_string() && !value.get<std::string>().empty()) {
        value = fs::absolute(value.get<std::string>()).lexically_normal().string();
    }
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ValidationError("override key '" + key + "' is malformed");
        }
        if (!node->is_object()) {
            throw ValidationError("override key '" + key + "' does not name an object member");
        }
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

std::vector<std::string> string_list(const json& j, const std::string& key)
{
    if (!j.is_array()) {
        throw ValidationError("config key '" + key + "' must be a list of strings");
    }
    std::vector<std::string> out;
    for (const auto& item : j) {
        out.push_back(get_as<std::string>(item, key));
    }
    return out;
}

std::map<std::string, fs::path> path_map(const json& j, const std::string& key, const fs::path& base)
{
    if (!j.is_object()) {
        throw ValidationError("config key '" + key + "' must be an object of paths");
    }
    std::map<std::string, fs::path> out;
    for (const auto& [name, value] : j.items()) {
        out[name] = resolve(base, get_as<std::string>(value, key + "." + name));
    }
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view json_text, const fs::path& base_dir,
                                         std::span<const std::string> overrides)
{
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) {
        throw ValidationError("config is not valid JSON");
    }
    if (!root.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    for (const auto& o : overrides) {
        apply_override(root, o);
    }

    ExperimentConfig c;
    for (const auto& [key, value] : root.items()) {
        if (path_keys().count(key) != 0) {
            const auto p = resolve(base_dir, get_as<std::string>(value, key));
            if (key == "corpus") c.corpus = p;
            else if (key == "topics") c.topics = p;
            else if (key == "qrels") c.qrels = p;
            else if (key == "pos") c.pos = p;
            else if (key == "output_dir") c.output_dir = p;
            else c.cache_dir = p;
        } else if (key == "corpus_format") {
            c.corpus_format = parse_passage_format(get_as<std::string>(value, key));
        } else if (key == "rewrites") {
            c.rewrites = path_map(value, key, base_dir);
        } else if (key == "rerank_scores") {
            c.rerank_scores = path_map(value, key, base_dir);
        } else if (key == "methods") {
            c.methods = string_list(value, key);
        } else if (key == "tokenizer") {
            for (const auto& [k, v] : value.items()) {
                if (k == "stem") c.tokenizer.stem = get_as<bool>(v, "tokenizer.stem");
                else if (k == "stopwords") c.tokenizer.remove_stopwords = get_as<bool>(v, "tokenizer.stopwords");
                else bad_key("tokenizer.", k);
            }
        } else if (key == "bm25") {
            for (const auto& [k, v] : value.items()) {
                if (k == "k1") c.bm25.k1 = get_as<double>(v, "bm25.k1");
                else if (k == "b") c.bm25.b = get_as<double>(v, "bm25.b");
                else bad_key("bm25.", k);
            }
        } else if (key == "hqe") {
            for (const auto& [k, v] : value.items()) {
                if (k == "r_topic") c.hqe.r_topic = get_as<double>(v, "hqe.r_topic");
                else if (k == "r_sub") c.hqe.r_sub = get_as<double>(v, "hqe.r_sub");
                else if (k == "eta") c.hqe.eta = get_as<double>(v, "hqe.eta");
                else if (k == "m_window") c.hqe.m_window = get_size(v, "hqe.m_window");
                else bad_key("hqe.", k);
            }
        } else if (key == "ablation") {
            for (const auto& [k, v] : value.items()) {
                const bool on = get_as<bool>(v, "ablation." + k);
                if (k == "topic") c.ablation.topic = on;
                else if (k == "subtopic") c.ablation.subtopic = on;
                else if (k == "qpp") c.ablation.qpp = on;
                else if (k == "term_weight") c.ablation.term_weight = on;
                else bad_key("ablation.", k);
            }
        } else if (key == "concat_window") {
            c.concat_window = get_size(value, key);
        } else if (key == "retrieval_depth") {
            c.retrieval_depth = get_size(value, key);
        } else if (key == "rerank_depth") {
            c.rerank_depth = get_size(value, key);
        } else if (key == "fusion") {
            for (const auto& [k, v] : value.items()) {
                if (k == "mode") c.fusion_mode = parse_fusion_mode(get_as<std::string>(v, "fusion.mode"));
                else if (k == "methods") c.fusion_methods = string_list(v, "fusion.methods");
                else if (k == "designated") c.designated = get_as<std::string>(v, "fusion.designated");
                else if (k == "k") c.rrf.k = get_as<double>(v, "fusion.k");
                else if (k == "depth") c.fusion_depth = get_size(v, "fusion.depth");
                else bad_key("fusion.", k);
            }
        } else if (key == "metrics") {
            c.metrics = value.is_string() ? MetricSpec::parse_list(value.get<std::string>()) : std::vector<MetricSpec>{};
            if (!value.is_string()) {
                for (const auto& name : string_list(value, key)) {
                    c.metrics.push_back(MetricSpec::parse(name));
                }
            }
        } else if (key == "threads") {
            c.threads = get_size(value, key);
        } else {
            bad_key("", key);
        }
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path, std::span<const std::string> overrides)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), fs::absolute(path).parent_path(), overrides);
}

void ExperimentConfig::validate() const
{
    auto require_file = [](const fs::path& p, const char* what) {
        if (p.empty()) {
            throw ValidationError(std::string("config is missing '") + what + "'");
        }
        if (!fs::is_regular_file(p)) {
            throw ValidationError(std::string(what) + " file not found: " + p.string());
        }
    };
    require_file(corpus, "corpus");
    require_file(topics, "topics");
    if (!qrels.empty()) require_file(qrels, "qrels");
    if (!pos.empty()) require_file(pos, "pos");
    for (const auto& [name, p] : rewrites) require_file(p, ("rewrites." + name).c_str());

    if (methods.empty()) {
        throw ValidationError("config lists no methods");
    }
    std::set<std::string> names;
    for (const auto& name : methods) {
        const auto m = MethodSpec::parse(name);
        if (!names.insert(m.name()).second) {
            throw ValidationError("method '" + name + "' listed twice");
        }
        if (m.method == CqrMethod::external && rewrites.count(m.external) == 0) {
            throw ValidationError("method '" + name + "' has no entry in rewrites");
        }
        if (uses_pos(m.method) && pos.empty()) {
            throw ValidationError("method '" + name + "' needs a pos annotation file");
        }
    }
    for (const auto& [name, p] : rerank_scores) {
        if (names.count(MethodSpec::parse(name).name()) == 0) {
            throw ValidationError("rerank_scores names method '" + name + "' which is not in methods");
        }
        require_file(p, ("rerank_scores." + name).c_str());
    }
    bm25.validate();
    hqe.validate();
    rrf.validate();
    if (retrieval_depth == 0 || rerank_depth == 0 || fusion_depth == 0) {
        throw ValidationError("depths must be positive");
    }
    if (metrics.empty()) {
        throw ValidationError("config lists no metrics");
    }
    if (fusion_mode != FusionMode::none) {
        if (fusion_methods.size() < 2) {
            throw ValidationError("fusion needs at least two methods");
        }
        for (const auto& name : fusion_methods) {
            const auto m = MethodSpec::parse(name).name();
            if (names.count(m) == 0) {
                throw ValidationError("fusion method '" + name + "' is not in methods");
            }
            if (fusion_mode == FusionMode::late && rerank_scores.count(m) == 0) {
                throw ValidationError("late fusion needs rerank_scores for '" + name + "'");
            }
        }
        if (!designated.empty()) {
            if (fusion_mode != FusionMode::early) {
                throw ValidationError("fusion.designated only applies to early fusion");
            }
            if (rerank_scores.count(MethodSpec::parse(designated).name()) == 0) {
                throw ValidationError("designated method '" + designated + "' has no rerank_scores");
            }
        }
    } else if (!fusion_methods.empty()) {
        throw ValidationError("fusion.methods given but fusion.mode is none");
    }
}

namespace {

json to_json(const ExperimentConfig& c)
{
    json j;
    j["corpus"] = c.corpus.string();
    j["corpus_format"] = c.corpus_format == PassageFormat::tsv ? "tsv" : "jsonl";
    j["topics"] = c.topics.string();
    j["qrels"] = c.qrels.string();
    j["pos"] = c.pos.string();
    j["rewrites"] = json::object();
    for (const auto& [k, v] : c.rewrites) j["rewrites"][k] = v.string();
    j["rerank_scores"] = json::object();
    for (const auto& [k, v] : c.rerank_scores) j["rerank_scores"][k] = v.string();
    j["methods"] = c.methods;
    j["tokenizer"] = {{"stem", c.tokenizer.stem}, {"stopwords", c.tokenizer.remove_stopwords}};
    j["bm25"] = {{"k1", c.bm25.k1}, {"b", c.bm25.b}};
    j["hqe"] = {{"r_topic", c.hqe.r_topic}, {"r_sub", c.hqe.r_sub}, {"eta", c.hqe.eta}, {"m_window", c.hqe.m_window}};
    j["ablation"] = {{"topic", c.ablation.topic},
                     {"subtopic", c.ablation.subtopic},
                     {"qpp", c.ablation.qpp},
                     {"term_weight", c.ablation.term_weight}};
    j["concat_window"] = c.concat_window;
    j["retrieval_depth"] = c.retrieval_depth;
    j["rerank_depth"] = c.rerank_depth;
    j["fusion"] = {{"mode", std::string(to_string(c.fusion_mode))},
                   {"methods", c.fusion_methods},
                   {"designated", c.designated},
                   {"k", c.rrf.k},
                   {"depth", c.fusion_depth}};
    j["metrics"] = json::array();
    for (const auto& m : c.metrics) j["metrics"].push_back(m.name());
    j["output_dir"] = c.output_dir.string();
    j["cache_dir"] = c.cache_dir.string();
    j["threads"] = c.threads;
    return j;
}

}  // namespace

std::string ExperimentConfig::canonical_json() const
{
    return to_json(*this).dump(2) + "\n";
}

std::string ExperimentConfig::hash() const
{
    // Locations do not matter, contents do: every input path is replaced by
    // its file hash, and the output settings are dropped.
    json j = to_json(*this);
    auto content = [](const fs::path& p) { return p.empty() ? std::string() : hex64(hash_file(p)); };
    j["corpus"] = content(corpus);
    j["topics"] = content(topics);
    j["qrels"] = content(qrels);
    j["pos"] = content(pos);
    for (const auto& [k, v] : rewrites) j["rewrites"][k] = content(v);
    for (const auto& [k, v] : rerank_scores) j["rerank_scores"][k] = content(v);
    j.erase("output_dir");
    j.erase("cache_dir");
    j.erase("threads");
    return hex64(fnv1a64(j.dump()));
}

// ---- parallelism ---------------------------------------------------------

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn)
{
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const auto i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

// ---- workspace -----------------------------------------------------------

namespace {

std::vector<std::pair<std::string, double>> read_ke_cache(const fs::path& path)
{
    std::vector<std::pair<std::string, double>> out;
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            continue;
        }
        double v = 0.0;
        const char* first = line.data() + tab + 1;
        const char* last = line.data() + line.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec == std::errc{} && ptr == last) {
            out.emplace_back(line.substr(0, tab), v);
        }
    }
    return out;
}

void write_atomically(const fs::path& path, const std::string& bytes)
{
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << bytes;
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string bm25_key(const Bm25Params& p)
{
    return "k1=" + format_score(p.k1) + ",b=" + format_score(p.b);
}

}  // namespace

Workspace::Workspace(ExperimentConfig config) : config_(std::move(config)), tokenizer_(config_.tokenizer)
{
    config_.validate();

    sessions_ = load_sessions(config_.topics);
    if (!config_.qrels.empty()) {
        qrels_ = Qrels::load(config_.qrels);
    }
    if (!config_.pos.empty()) {
        pos_ = load_pos_annotations(config_.pos);
    }
    for (const auto& [name, path] : config_.rewrites) {
        rewrites_[name] = load_external_rewrites(path);
    }

    index_key_ = hex64(hash_file(config_.corpus, fnv1a64(std::string(config_.tokenizer.stem ? "s1" : "s0") +
                                                          (config_.tokenizer.remove_stopwords ? "w1" : "w0") +
                                                          (config_.corpus_format == PassageFormat::tsv ? "t" : "j"))));
    const fs::path index_file =
        config_.cache_dir.empty() ? fs::path() : config_.cache_dir / ("index-" + index_key_ + ".bin");
    if (!index_file.empty() && fs::is_regular_file(index_file)) {
        index_ = std::make_unique<InvertedIndex>(InvertedIndex::load(index_file));
    } else {
        index_ = std::make_unique<InvertedIndex>(
            build_index_from_file(config_.corpus, config_.corpus_format, config_.tokenizer));
        if (!index_file.empty()) {
            fs::create_directories(config_.cache_dir);
            auto tmp = index_file;
            tmp += ".tmp";
            index_->save(tmp);
            fs::rename(tmp, index_file);
        }
    }
    scorer_ = std::make_unique<MaxScoreCache>(*index_, config_.bm25);
    if (!config_.cache_dir.empty()) {
        const auto ke = config_.cache_dir / ("ke-" + hex64(fnv1a64(bm25_key(config_.bm25), fnv1a64(index_key_))) + ".tsv");
        if (fs::is_regular_file(ke)) {
            const auto entries = read_ke_cache(ke);
            scorer_->preload(entries);
        }
    }
}

Workspace::~Workspace() = default;

void Workspace::save_cache() const
{
    if (config_.cache_dir.empty()) {
        return;
    }
    std::string bytes;
    for (const auto& [term, score] : scorer_->snapshot()) {
        bytes += term;
        bytes += '\t';
        bytes += format_score(score);
        bytes += '\n';
    }
    write_atomically(config_.cache_dir / ("ke-" + hex64(fnv1a64(bm25_key(config_.bm25), fnv1a64(index_key_))) + ".tsv"),
                     bytes);
}

std::vector<ReformulatedQuery> Workspace::reformulate(const MethodSpec& method, const HqeParams& hqe,
                                                      std::size_t concat_window) const
{
    ReformulateOptions options;
    options.method = method.method;
    options.hqe = hqe;
    options.ablation = config_.ablation;
    options.concat_window = concat_window;
    options.pos = uses_pos(method.method) ? &pos_ : nullptr;
    if (method.method == CqrMethod::external) {
        auto it = rewrites_.find(method.external);
        if (it == rewrites_.end()) {
            throw ValidationError("no rewrites registered as '" + method.external + "'");
        }
        options.rewrites = &it->second;
    }
    std::vector<std::vector<ReformulatedQuery>> per_session(sessions_.size());
    parallel_for(sessions_.size(), config_.threads, [&](std::size_t s) {
        per_session[s] = reformulate_session(sessions_[s], options, tokenizer_, scorer_.get());
    });
    std::vector<ReformulatedQuery> out;
    for (auto& queries : per_session) {
        std::move(queries.begin(), queries.end(), std::back_inserter(out));
    }
    return out;
}

Run Workspace::retrieve(std::span<const ReformulatedQuery> queries) const
{
    Run run(queries.size());
    parallel_for(queries.size(), config_.threads, [&](std::size_t q) {
        run[q] = retrieve_topk(*index_, config_.bm25, queries[q].tokens, config_.retrieval_depth, queries[q].qid);
    });
    return run;
}

RerankScores Workspace::load_rerank(const std::string& method) const
{
    auto it = config_.rerank_scores.find(method);
    if (it == config_.rerank_scores.end()) {
        throw Error("no rerank scores for " + method);
    }
    return RerankScores::load(it->second);
}

namespace {

Run truncate_run(Run run, std::size_t depth)
{
    for (auto& list : run) {
        if (list.entries.size() > depth) {
            list.entries.resize(depth);
        }
    }
    return run;
}

std::optional<MetricReport> maybe_evaluate(const Run& run, const Qrels* qrels, std::span<const MetricSpec> metrics)
{
    if (qrels == nullptr) {
        return std::nullopt;
    }
    return evaluate(run, *qrels, metrics);
}

}  // namespace

ExperimentResult Workspace::run() const
{
    ExperimentResult result;
    result.config_hash = config_.hash();
    const fs::path run_cache =
        config_.cache_dir.empty() ? fs::path() : config_.cache_dir / result.config_hash / "first-stage";

    std::map<std::string, const Run*> first_stage;
    std::map<std::string, const Run*> reranked;
    result.stages.reserve(2 * config_.methods.size() + 1);
    for (const auto& name : config_.methods) {
        const auto method = MethodSpec::parse(name);
        auto queries = reformulate(method, config_.hqe, config_.concat_window);
        Run run;
        const fs::path cached = run_cache.empty() ? fs::path() : run_cache / (method.file_stem() + ".run");
        if (!cached.empty() && fs::is_regular_file(cached)) {
            // Run files cannot hold empty lists; rebuild one list per query.
            std::map<std::string, RankedList> by_qid;
            for (auto& list : read_run(cached)) {
                by_qid[list.qid] = std::move(list);
            }
            for (const auto& q : queries) {
                auto it = by_qid.find(q.qid);
                run.push_back(it == by_qid.end() ? RankedList{q.qid, {}} : std::move(it->second));
            }
        } else {
            run = retrieve(queries);
            if (!cached.empty()) {
                std::ostringstream out;
                write_run(out, run, method.file_stem());
                write_atomically(cached, out.str());
            }
        }
        result.queries[method.name()] = std::move(queries);
        auto report = maybe_evaluate(run, qrels(), config_.metrics);
        result.stages.push_back({method.name(), "first-stage", std::move(run), std::move(report)});
        first_stage[method.name()] = &result.stages.back().run;

        if (config_.rerank_scores.count(method.name()) != 0) {
            auto scores = load_rerank(method.name());
            Run rr = rerank_run(truncate_run(*first_stage[method.name()], config_.rerank_depth), scores);
            auto rr_report = maybe_evaluate(rr, qrels(), config_.metrics);
            result.stages.push_back({method.name(), "reranked", std::move(rr), std::move(rr_report)});
            reranked[method.name()] = &result.stages.back().run;
        }
    }

    if (config_.fusion_mode != FusionMode::none) {
        std::vector<const Run*> inputs;
        for (const auto& name : config_.fusion_methods) {
            const auto key = MethodSpec::parse(name).name();
            inputs.push_back(config_.fusion_mode == FusionMode::late ? reranked.at(key) : first_stage.at(key));
        }
        std::vector<Run> copies;
        copies.reserve(inputs.size());
        for (const auto* r : inputs) {
            copies.push_back(*r);
        }
        Run fused = rrf_fuse_runs(copies, config_.rrf, config_.fusion_depth);
        if (config_.fusion_mode == FusionMode::early && !config_.designated.empty()) {
            fused = rerank_run(fused, load_rerank(MethodSpec::parse(config_.designated).name()));
        }
        auto report = maybe_evaluate(fused, qrels(), config_.metrics);
        const std::string stage = config_.fusion_mode == FusionMode::early ? "early-fusion" : "late-fusion";
        result.stages.push_back({"fusion", stage, std::move(fused), std::move(report)});
    }
    save_cache();
    return result;
}

std::vector<GridRow> Workspace::grid(const GridSpec& spec) const
{
    if (qrels_ == std::nullopt) {
        throw ValidationError("grid search needs qrels");
    }
    const auto method = MethodSpec::parse(spec.method);
    const bool is_hqe = method.method == CqrMethod::hqe || method.method == CqrMethod::hqe_pos;
    const bool is_concat = method.method == CqrMethod::concat || method.method == CqrMethod::concat_pos;
    if (!is_hqe && !is_concat) {
        throw ValidationError("grid search supports hqe, hqe-pos, concat and concat-pos");
    }
    if (uses_pos(method.method) && config_.pos.empty()) {
        throw ValidationError("method '" + spec.method + "' needs a pos annotation file");
    }
    if (is_concat && (!spec.r_topic.empty() || !spec.r_sub.empty() || !spec.eta.empty())) {
        throw ValidationError("concat grids sweep m_window only");
    }
    auto axis = [](std::vector<double> values, double fallback) {
        if (values.empty()) {
            values.push_back(fallback);
        }
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        return values;
    };
    const auto r_topics = axis(spec.r_topic, config_.hqe.r_topic);
    const auto r_subs = axis(spec.r_sub, config_.hqe.r_sub);
    const auto etas = axis(spec.eta, config_.hqe.eta);
    auto windows = spec.m_window;
    if (windows.empty()) {
        windows.push_back(is_hqe ? config_.hqe.m_window : config_.concat_window);
    }
    std::sort(windows.begin(), windows.end());
    windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

    std::vector<HqeParams> combos;
    for (double rt : r_topics) {
        for (double rs : r_subs) {
            if (is_hqe && !(rt > rs)) {
                continue;
            }
            for (double eta : etas) {
                for (auto m : windows) {
                    combos.push_back({rt, rs, eta, m});
                }
            }
        }
    }
    const std::vector<MetricSpec> metrics{{MetricSpec::Kind::recall, 1000}, {MetricSpec::Kind::map, 1000}};
    std::vector<GridRow> rows;
    rows.reserve(combos.size());
    for (const auto& p : combos) {
        const auto queries = reformulate(method, p, is_concat ? p.m_window : config_.concat_window);
        const auto report = evaluate(retrieve(queries), *qrels_, metrics);
        rows.push_back({p, report.means[0], report.means[1]});
    }
    std::sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
        if (a.recall != b.recall) return a.recall > b.recall;
        if (a.map != b.map) return a.map > b.map;
        return std::tie(a.params.r_topic, a.params.r_sub, a.params.eta, a.params.m_window) <
               std::tie(b.params.r_topic, b.params.r_sub, b.params.eta, b.params.m_window);
    });
    save_cache();
    return rows;
}

const StageResult* ExperimentResult::find(std::string_view method, std::string_view stage) const
{
    for (const auto& s : stages) {
        if (s.method == method && s.stage == stage) {
            return &s;
        }
    }
    return nullptr;
}

// ---- outputs -------------------------------------------------------------

namespace {

std::string run_file_name(const StageResult& s)
{
    std::string stem = s.method == "fusion" ? std::string("fusion") : MethodSpec::parse(s.method).file_stem();
    if (s.stage == "reranked") {
        stem += ".reranked";
    }
    return stem + ".run";
}

std::string run_tag(const StageResult& s)
{
    auto name = run_file_name(s);
    name.resize(name.size() - 4);
    for (auto& c : name) {
        if (c == '.') c = '-';
    }
    return name;
}

}  // namespace

void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config, const fs::path& dir)
{
    fs::create_directories(dir / "runs");
    for (const auto& s : result.stages) {
        write_run(dir / "runs" / run_file_name(s), s.run, run_tag(s));
    }
    for (const auto& [name, queries] : result.queries) {
        write_rewrites(dir / "rewrites" / (MethodSpec::parse(name).file_stem() + ".tsv"), queries);
    }

    std::ostringstream csv;
    std::ostringstream per_query;
    std::ostringstream text;
    csv << "method,stage,metric,value\n";
    per_query << "method,stage,qid,metric,value\n";
    std::size_t width = 6;
    for (const auto& s : result.stages) {
        width = std::max(width, s.method.size());
    }
    bool any_report = false;
    for (const auto& s : result.stages) {
        if (!s.report) {
            continue;
        }
        if (!any_report) {
            text << std::left << std::setw(static_cast<int>(width) + 2) << "method" << std::setw(14) << "stage";
            for (const auto& m : s.report->metrics) {
                text << std::right << std::setw(12) << m.name();
            }
            text << '\n';
            any_report = true;
        }
        text << std::left << std::setw(static_cast<int>(width) + 2) << s.method << std::setw(14) << s.stage;
        const auto& r = *s.report;
        for (std::size_t m = 0; m < r.metrics.size(); ++m) {
            csv << s.method << ',' << s.stage << ',' << r.metrics[m].name() << ',' << format_score(r.means[m]) << '\n';
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(4) << r.means[m];
            text << std::right << std::setw(12) << cell.str();
        }
        text << '\n';
        for (std::size_t q = 0; q < r.qids.size(); ++q) {
            for (std::size_t m = 0; m < r.metrics.size(); ++m) {
                per_query << s.method << ',' << s.stage << ',' << r.qids[q] << ',' << r.metrics[m].name() << ','
                          << format_score(r.values[q][m]) << '\n';
            }
        }
    }
    if (any_report) {
        write_atomically(dir / "metrics.csv", csv.str());
        write_atomically(dir / "per_query.csv", per_query.str());
        write_atomically(dir / "metrics.txt", text.str());
    }
    // Where and how fast the run executed is not part of the experiment, and
    // would break byte-identical reruns.
    json record = to_json(config);
    record.erase("output_dir");
    record.erase("cache_dir");
    record.erase("threads");
    write_atomically(dir / "config.json", record.dump(2) + "\n");

    std::ostringstream log;
    log << "config_hash " << result.config_hash << '\n';
    for (const auto& s : result.stages) {
        std::size_t entries = 0;
        for (const auto& l : s.run) {
            entries += l.entries.size();
        }
        log << "stage " << s.method << ' ' << s.stage << " queries=" << s.run.size() << " entries=" << entries
            << '\n';
    }
    write_atomically(dir / "experiment.log", log.str());
}

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    Workspace ws(config);
    auto result = ws.run();
    write_experiment_outputs(result, ws.config(), ws.config().output_dir);
    return result;
}

void write_grid_csv(std::ostream& out, std::span<const GridRow> rows)
{
    out << "r_topic,r_sub,eta,m_window,recall@1000,map\n";
    for (const auto& r : rows) {
        out << format_score(r.params.r_topic) << ',' << format_score(r.params.r_sub) << ','
            << format_score(r.params.eta) << ',' << r.params.m_window << ',' << format_score(r.recall) << ','
            << format_score(r.map) << '\n';
    }
}

}  // namespace convsearch
