// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/cqr.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "convsearch/error.hpp"

namespace convsearch {

using nlohmann::json;

PosTag parse_pos_tag(std::string_view label) noexcept
{
    std::string upper(label);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "NOUN" || upper == "PROPN") {
        return PosTag::noun;
    }
    if (upper == "ADJ") {
        return PosTag::adj;
    }
    return PosTag::other;
}

PosAnnotations load_pos_annotations(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open POS annotation file " + path.string());
    }
    PosAnnotations out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string(), line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!row.is_object() || !row.contains("qid") || !row["qid"].is_string() || !row.contains("tags") ||
            !row["tags"].is_array()) {
            throw ParseError(path.string(), line_no, "expected {\"qid\": string, \"tags\": [...]}");
        }
        std::vector<PosTag> tags;
        for (const auto& t : row["tags"]) {
            if (!t.is_string()) {
                throw ParseError(path.string(), line_no, "tags must be strings");
            }
            tags.push_back(parse_pos_tag(t.get<std::string>()));
        }
        auto qid = row["qid"].get<std::string>();
        if (!out.emplace(qid, std::move(tags)).second) {
            throw ParseError(path.string(), line_no, "duplicate qid '" + qid + "'");
        }
    }
    return out;
}

void HqeParams::validate() const
{
    if (!(r_topic > r_sub)) {
        throw ValidationError("HQE requires r_topic > r_sub");
    }
}

std::vector<Turn> prepare_turns(const Session& session, const Tokenizer& tokenizer, const PosAnnotations* pos)
{
    std::vector<Turn> turns;
    turns.reserve(session.turns.size());
    for (const auto& u : session.turns) {
        Turn t{u.qid(), u.raw_text, tokenizer(u.raw_text), {}};
        if (pos != nullptr) {
            auto it = pos->find(t.qid);
            if (it == pos->end()) {
                throw Error("no POS annotation for qid " + t.qid);
            }
            if (it->second.size() != t.tokens.size()) {
                throw Error("POS annotation for qid " + t.qid + " has " + std::to_string(it->second.size()) +
                            " tags but the utterance has " + std::to_string(t.tokens.size()) + " tokens");
            }
            t.tags = it->second;
        }
        turns.push_back(std::move(t));
    }
    return turns;
}

namespace {

void insert_unique(TokenStream& set, const std::string& token)
{
    if (std::find(set.begin(), set.end(), token) == set.end()) {
        set.push_back(token);
    }
}

std::string with_prefix(const TokenStream& prefix, const std::string& raw_text)
{
    if (prefix.empty()) {
        return raw_text;
    }
    return join_tokens(prefix) + " " + raw_text;
}

}  // namespace

KeywordSets extract_keywords(const MaxScoreCache& scorer, std::span<const Turn> turns, const HqeParams& params)
{
    params.validate();
    KeywordSets out;
    const std::size_t i = turns.size();
    for (std::size_t j = 1; j <= i; ++j) {
        const Turn& turn = turns[j - 1];
        const bool in_window = j + params.m_window >= i;
        for (std::size_t k = 0; k < turn.tokens.size(); ++k) {
            if (!turn.eligible(k)) {
                continue;
            }
            const auto& token = turn.tokens[k];
            const double score = scorer.term(token);
            if (score > params.r_topic) {
                insert_unique(out.topic, token);
            }
            if (score > params.r_sub && in_window) {
                insert_unique(out.sub, token);
            }
        }
    }
    return out;
}

ReformulatedQuery hqe_rewrite(const MaxScoreCache& scorer, std::span<const Turn> turns, const HqeParams& params,
                              const HqeAblation& ablation)
{
    if (turns.empty()) {
        throw ValidationError("hqe_rewrite needs at least one turn");
    }
    const Turn& current = turns.back();
    if (turns.size() == 1) {
        return raw_rewrite(current);
    }
    auto keywords = extract_keywords(scorer, turns, params);
    TokenStream prefix;
    if (ablation.topic) {
        prefix = keywords.topic;
    }
    if (ablation.subtopic) {
        const bool ambiguous = !ablation.qpp || scorer.utterance(current.tokens) < params.eta;
        if (ambiguous) {
            prefix.insert(prefix.end(), keywords.sub.begin(), keywords.sub.end());
        }
    }
    ReformulatedQuery q{current.qid, prefix, {}};
    q.tokens.insert(q.tokens.end(), current.tokens.begin(), current.tokens.end());
    if (ablation.term_weight) {
        q.display_text = with_prefix(prefix, current.raw_text);
    } else {
        TokenStream unique;
        for (const auto& t : q.tokens) {
            insert_unique(unique, t);
        }
        q.tokens = std::move(unique);
        q.display_text = join_tokens(q.tokens);
    }
    return q;
}

ReformulatedQuery concat_rewrite(std::span<const Turn> turns, std::size_t m_window)
{
    if (turns.empty()) {
        throw ValidationError("concat_rewrite needs at least one turn");
    }
    const std::size_t i = turns.size();
    const std::size_t first = i > m_window ? i - m_window : 1;  // 1-based, clamped at turn 1
    TokenStream prefix;
    for (std::size_t j = first; j < i; ++j) {
        const Turn& t = turns[j - 1];
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.eligible(k)) {
                prefix.push_back(t.tokens[k]);
            }
        }
    }
    const Turn& current = turns.back();
    ReformulatedQuery q{current.qid, prefix, with_prefix(prefix, current.raw_text)};
    q.tokens.insert(q.tokens.end(), current.tokens.begin(), current.tokens.end());
    return q;
}

ReformulatedQuery raw_rewrite(const Turn& turn) { return {turn.qid, turn.tokens, turn.raw_text}; }

ExternalRewrites load_external_rewrites(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open rewrite file " + path.string());
    }
    ExternalRewrites out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(path.string(), line_no, "missing TAB between qid and text");
        }
        auto qid = line.substr(0, tab);
        if (qid.empty()) {
            throw ParseError(path.string(), line_no, "empty qid");
        }
        if (!out.emplace(qid, line.substr(tab + 1)).second) {
            throw ParseError(path.string(), line_no, "duplicate qid '" + qid + "'");
        }
    }
    return out;
}

void write_rewrites(const std::filesystem::path& path, std::span<const ReformulatedQuery> queries)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    for (const auto& q : queries) {
        if (q.qid.find_first_of("\t\n") != std::string::npos ||
            q.display_text.find('\n') != std::string::npos) {
            throw Error("rewrite for qid '" + q.qid + "' is not representable as a TSV row");
        }
        out << q.qid << '\t' << q.display_text << '\n';
    }
}

ReformulatedQuery external_rewrite(const ExternalRewrites& rewrites, const std::string& qid,
                                   const Tokenizer& tokenizer)
{
    auto it = rewrites.find(qid);
    if (it == rewrites.end()) {
        throw Error("no external rewrite for qid " + qid);
    }
    return {qid, tokenizer(it->second), it->second};
}

CqrMethod parse_cqr_method(std::string_view name)
{
    if (name == "raw") return CqrMethod::raw;
    if (name == "concat") return CqrMethod::concat;
    if (name == "concat-pos") return CqrMethod::concat_pos;
    if (name == "hqe") return CqrMethod::hqe;
    if (name == "hqe-pos") return CqrMethod::hqe_pos;
    if (name == "external") return CqrMethod::external;
    throw ValidationError("unknown reformulation method '" + std::string(name) +
                          "' (expected raw|concat|concat-pos|hqe|hqe-pos|external)");
}

std::string_view to_string(CqrMethod method) noexcept
{
    switch (method) {
    case CqrMethod::raw: return "raw";
    case CqrMethod::concat: return "concat";
    case CqrMethod::concat_pos: return "concat-pos";
    case CqrMethod::hqe: return "hqe";
    case CqrMethod::hqe_pos: return "hqe-pos";
    case CqrMethod::external: return "external";
    }
    return "?";
}

std::vector<ReformulatedQuery> reformulate_session(const Session& session, const ReformulateOptions& options,
                                                   const Tokenizer& tokenizer, const MaxScoreCache* scorer)
{
    const PosAnnotations* pos = uses_pos(options.method) ? options.pos : nullptr;
    auto turns = prepare_turns(session, tokenizer, pos);
    std::vector<ReformulatedQuery> out;
    out.reserve(turns.size());
    for (std::size_t i = 1; i <= turns.size(); ++i) {
        std::span<const Turn> prefix(turns.data(), i);
        switch (options.method) {
        case CqrMethod::raw:
            out.push_back(raw_rewrite(prefix.back()));
            break;
        case CqrMethod::concat:
        case CqrMethod::concat_pos:
            out.push_back(concat_rewrite(prefix, options.concat_window));
            break;
        case CqrMethod::hqe:
        case CqrMethod::hqe_pos:
            if (scorer == nullptr) {
                throw ValidationError("HQE needs an index");
            }
            out.push_back(hqe_rewrite(*scorer, prefix, options.hqe, options.ablation));
            break;
        case CqrMethod::external:
            if (options.rewrites == nullptr) {
                throw ValidationError("external method needs a rewrite file");
            }
            out.push_back(external_rewrite(*options.rewrites, prefix.back().qid, tokenizer));
            break;
        }
    }
    return out;
}

}  // namespace convsearch
