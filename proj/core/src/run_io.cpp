// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/run_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "convsearch/error.hpp"

namespace convsearch {

std::string format_score(double score)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), score);
    if (ec != std::errc{}) {
        throw Error("cannot format score");
    }
    return std::string(buf.data(), ptr);
}

void write_run(std::ostream& out, const Run& run, std::string_view tag)
{
    if (tag.empty() || tag.find_first_of(" \t\n") != std::string_view::npos) {
        throw ValidationError("run tag must be a single non-empty word");
    }
    for (const auto& list : run) {
        for (const auto& e : list.entries) {
            out << list.qid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_score(e.score) << ' ' << tag
                << '\n';
        }
    }
}

void write_run(const std::filesystem::path& path, const Run& run, std::string_view tag)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write run " + path.string());
    }
    write_run(out, run, tag);
    out.flush();
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

Run read_run(std::istream& in, const std::string& source, std::vector<std::string>* warnings)
{
    Run run;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::unordered_set<std::string>> seen;
    std::vector<std::size_t> first_line;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        std::string qid, q0, doc, rank_text, score_text, tag;
        if (!(row >> qid)) {
            continue;
        }
        if (!(row >> q0 >> doc >> rank_text >> score_text >> tag)) {
            throw ParseError(source, line_no, "expected 'qid Q0 doc_id rank score tag'");
        }
        int rank = 0;
        auto [rp, rec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
        if (rec != std::errc{} || rp != rank_text.data() + rank_text.size() || rank < 1) {
            throw ParseError(source, line_no, "invalid rank '" + rank_text + "'");
        }
        double score = 0.0;
        auto [sp, sec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
        if (sec != std::errc{} || sp != score_text.data() + score_text.size()) {
            throw ParseError(source, line_no, "invalid score '" + score_text + "'");
        }
        auto [it, inserted] = slot.emplace(qid, run.size());
        if (inserted) {
            run.push_back({qid, {}});
            seen.emplace_back();
            first_line.push_back(line_no);
        }
        if (!seen[it->second].insert(doc).second) {
            throw ParseError(source, line_no, "duplicate doc '" + doc + "' for query " + qid);
        }
        run[it->second].entries.push_back({doc, score, rank});
    }
    for (std::size_t q = 0; q < run.size(); ++q) {
        auto& list = run[q];
        std::stable_sort(list.entries.begin(), list.entries.end(),
                         [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
        if (!has_contiguous_ranks(list)) {
            throw ParseError(source, first_line[q], "ranks for query " + list.qid + " are not 1..n");
        }
        if (!scores_non_increasing(list)) {
            std::string msg = source + ": scores for query " + list.qid + " increase with rank";
            if (warnings != nullptr) {
                warnings->push_back(std::move(msg));
            } else {
                std::cerr << "warning: " << msg << '\n';
            }
        }
    }
    return run;
}

Run read_run(const std::filesystem::path& path, std::vector<std::string>* warnings)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open run " + path.string());
    }
    return read_run(in, path.string(), warnings);
}

}  // namespace convsearch
