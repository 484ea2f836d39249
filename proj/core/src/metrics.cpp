// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "convsearch/error.hpp"

namespace convsearch {

void Qrels::add(const std::string& qid, const std::string& doc_id, int grade)
{
    if (grade < 0 || grade > kMaxGrade) {
        throw Error("grade " + std::to_string(grade) + " outside 0.." + std::to_string(kMaxGrade));
    }
    if (!judgments_[qid].emplace(doc_id, grade).second) {
        throw Error("duplicate judgment for (" + qid + ", " + doc_id + ")");
    }
    ++counts_[static_cast<std::size_t>(grade)];
    ++size_;
}

int Qrels::grade(const std::string& qid, const std::string& doc_id) const
{
    auto q = judgments_.find(qid);
    if (q == judgments_.end()) {
        return 0;
    }
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

std::size_t Qrels::relevant_count(const std::string& qid, int threshold) const
{
    auto q = judgments_.find(qid);
    if (q == judgments_.end()) {
        return 0;
    }
    return static_cast<std::size_t>(std::count_if(q->second.begin(), q->second.end(),
                                                  [threshold](const auto& kv) { return kv.second >= threshold; }));
}

std::vector<int> Qrels::positive_grades(const std::string& qid) const
{
    std::vector<int> out;
    if (auto q = judgments_.find(qid); q != judgments_.end()) {
        for (const auto& [doc, g] : q->second) {
            if (g > 0) {
                out.push_back(g);
            }
        }
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

std::vector<std::string> Qrels::qids() const
{
    std::vector<std::string> out;
    out.reserve(judgments_.size());
    for (const auto& [qid, _] : judgments_) {
        out.push_back(qid);
    }
    return out;
}

Qrels Qrels::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open qrels " + path.string());
    }
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        std::string qid, iter, doc, grade_text, extra;
        if (!(row >> qid)) {
            continue;  // blank line
        }
        if (!(row >> iter >> doc >> grade_text) || (row >> extra)) {
            throw ParseError(path.string(), line_no, "expected 'qid 0 doc_id grade'");
        }
        int grade = 0;
        auto [ptr, ec] = std::from_chars(grade_text.data(), grade_text.data() + grade_text.size(), grade);
        if (ec != std::errc{} || ptr != grade_text.data() + grade_text.size()) {
            throw ParseError(path.string(), line_no, "invalid grade '" + grade_text + "'");
        }
        try {
            qrels.add(qid, doc, grade);
        } catch (const Error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return qrels;
}

double average_precision(const RankedList& list, const Qrels& qrels, std::size_t depth, int rel_threshold)
{
    const auto num_rel = qrels.relevant_count(list.qid, rel_threshold);
    if (num_rel == 0) {
        return 0.0;
    }
    const auto n = std::min(depth, list.entries.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (qrels.grade(list.qid, list.entries[i].doc_id) >= rel_threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(num_rel);
}

double ndcg_at_k(const RankedList& list, const Qrels& qrels, std::size_t k)
{
    auto ideal = qrels.positive_grades(list.qid);
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    if (idcg == 0.0) {
        return 0.0;
    }
    double dcg = 0.0;
    const auto n = std::min(k, list.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int g = qrels.grade(list.qid, list.entries[i].doc_id);
        if (g > 0) {
            dcg += g / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    return dcg / idcg;
}

double recall_at_k(const RankedList& list, const Qrels& qrels, std::size_t k, int rel_threshold)
{
    const auto num_rel = qrels.relevant_count(list.qid, rel_threshold);
    if (num_rel == 0) {
        return 0.0;
    }
    const auto n = std::min(k, list.entries.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (qrels.grade(list.qid, list.entries[i].doc_id) >= rel_threshold) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(num_rel);
}

std::string MetricSpec::name() const
{
    switch (kind) {
    case Kind::map:
        return depth == 1000 ? "map" : "map@" + std::to_string(depth);
    case Kind::ndcg:
        return "ndcg@" + std::to_string(depth);
    case Kind::recall:
        return "recall@" + std::to_string(depth);
    }
    return "?";
}

namespace {

std::size_t parse_depth(std::string_view digits, std::string_view whole)
{
    std::size_t depth = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), depth);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || depth == 0) {
        throw ValidationError("invalid metric '" + std::string(whole) + "'");
    }
    return depth;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

MetricSpec MetricSpec::parse(std::string_view text)
{
    const auto s = lower(text);
    auto starts = [&s](std::string_view p) { return s.rfind(p, 0) == 0; };
    if (s == "map") {
        return {Kind::map, 1000};
    }
    if (starts("map@")) {
        return {Kind::map, parse_depth(std::string_view(s).substr(4), text)};
    }
    if (starts("ndcg@")) {
        return {Kind::ndcg, parse_depth(std::string_view(s).substr(5), text)};
    }
    if (starts("ndcg_cut_")) {
        return {Kind::ndcg, parse_depth(std::string_view(s).substr(9), text)};
    }
    if (starts("recall@")) {
        return {Kind::recall, parse_depth(std::string_view(s).substr(7), text)};
    }
    if (starts("r@")) {
        return {Kind::recall, parse_depth(std::string_view(s).substr(2), text)};
    }
    if (starts("recall_")) {
        return {Kind::recall, parse_depth(std::string_view(s).substr(7), text)};
    }
    throw ValidationError("unknown metric '" + std::string(text) + "' (expected map, ndcg@k, recall@k)");
}

std::vector<MetricSpec> MetricSpec::parse_list(std::string_view text)
{
    std::vector<MetricSpec> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto part = text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (!part.empty()) {
            out.push_back(parse(part));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    if (out.empty()) {
        throw ValidationError("no metrics given");
    }
    return out;
}

double compute_metric(const MetricSpec& metric, const RankedList& list, const Qrels& qrels)
{
    switch (metric.kind) {
    case MetricSpec::Kind::map:
        return average_precision(list, qrels, metric.depth);
    case MetricSpec::Kind::ndcg:
        return ndcg_at_k(list, qrels, metric.depth);
    case MetricSpec::Kind::recall:
        return recall_at_k(list, qrels, metric.depth);
    }
    return 0.0;
}

std::size_t MetricReport::metric_index(std::string_view name) const
{
    auto wanted = MetricSpec::parse(name);
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (metrics[i] == wanted) {
            return i;
        }
    }
    throw ValidationError("metric '" + std::string(name) + "' is not in the report");
}

std::vector<double> MetricReport::column(std::string_view name) const
{
    const auto m = metric_index(name);
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) {
        out.push_back(row[m]);
    }
    return out;
}

MetricReport evaluate(const Run& run, const Qrels& qrels, std::span<const MetricSpec> metrics)
{
    MetricReport report;
    report.metrics.assign(metrics.begin(), metrics.end());
    for (const auto& qid : qrels.qids()) {
        if (qrels.relevant_count(qid) > 0) {
            report.qids.push_back(qid);
        }
    }
    if (report.qids.empty()) {
        throw Error("no judged queries");
    }
    std::unordered_map<std::string, const RankedList*> by_qid;
    for (const auto& list : run) {
        by_qid.emplace(list.qid, &list);
    }
    report.means.assign(metrics.size(), 0.0);
    for (const auto& qid : report.qids) {
        RankedList empty{qid, {}};
        auto it = by_qid.find(qid);
        const RankedList& list = it == by_qid.end() ? empty : *it->second;
        std::vector<double> row;
        row.reserve(metrics.size());
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            row.push_back(compute_metric(metrics[m], list, qrels));
            report.means[m] += row.back();
        }
        report.values.push_back(std::move(row));
    }
    for (auto& m : report.means) {
        m /= static_cast<double>(report.qids.size());
    }
    return report;
}

std::vector<MetricSpec> default_metrics()
{
    return {{MetricSpec::Kind::map, 1000},
            {MetricSpec::Kind::ndcg, 3},
            {MetricSpec::Kind::ndcg, 1},
            {MetricSpec::Kind::recall, 1000}};
}

}  // namespace convsearch
