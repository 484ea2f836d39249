// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/corpus.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convsearch/error.hpp"

namespace convsearch {

using nlohmann::json;

PassageFormat parse_passage_format(std::string_view name)
{
    if (name == "tsv") {
        return PassageFormat::tsv;
    }
    if (name == "jsonl") {
        return PassageFormat::jsonl;
    }
    throw ValidationError("unknown passage format '" + std::string(name) + "' (expected tsv|jsonl)");
}

PassageReader::PassageReader(const std::filesystem::path& path, PassageFormat format)
    : path_(path), in_(path, std::ios::binary), format_(format)
{
    if (!in_) {
        throw Error("cannot open passage file " + path.string());
    }
}

std::optional<Passage> PassageReader::next()
{
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line.empty()) {
            continue;
        }
        Passage p;
        if (format_ == PassageFormat::tsv) {
            auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw ParseError(path_.string(), line_no_, "missing TAB between doc_id and text");
            }
            p.doc_id = line.substr(0, tab);
            p.text = line.substr(tab + 1);
        } else {
            json row;
            try {
                row = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(path_.string(), line_no_, std::string("invalid JSON: ") + e.what());
            }
            if (!row.is_object() || !row.contains("id") || !row.contains("contents") ||
                !row["id"].is_string() || !row["contents"].is_string()) {
                throw ParseError(path_.string(), line_no_,
                                 "expected object with string fields 'id' and 'contents'");
            }
            p.doc_id = row["id"].get<std::string>();
            p.text = row["contents"].get<std::string>();
        }
        if (p.doc_id.empty()) {
            throw ParseError(path_.string(), line_no_, "empty doc_id");
        }
        if (!seen_.insert(p.doc_id).second) {
            throw ParseError(path_.string(), line_no_, "duplicate doc_id '" + p.doc_id + "'");
        }
        ++count_;
        return p;
    }
    if (in_.bad()) {
        throw Error("read error on " + path_.string());
    }
    return std::nullopt;
}

std::vector<Passage> load_passages(const std::filesystem::path& path, PassageFormat format)
{
    PassageReader reader(path, format);
    std::vector<Passage> out;
    while (auto p = reader.next()) {
        out.push_back(std::move(*p));
    }
    return out;
}

void write_passages(const std::filesystem::path& path, std::span<const Passage> passages,
                    PassageFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    for (const auto& p : passages) {
        if (p.doc_id.empty()) {
            throw Error("cannot write passage with empty doc_id");
        }
        if (format == PassageFormat::tsv) {
            if (p.doc_id.find_first_of("\t\n") != std::string::npos ||
                p.text.find('\n') != std::string::npos) {
                throw Error("passage '" + p.doc_id + "' is not representable as a TSV row");
            }
            out << p.doc_id << '\t' << p.text << '\n';
        } else {
            json row = {{"id", p.doc_id}, {"contents", p.text}};
            out << row.dump() << '\n';
        }
    }
    if (!out) {
        throw Error("write error on " + path.string());
    }
}

std::string Utterance::make_qid(std::string_view session_id, int turn)
{
    std::string qid(session_id);
    qid.push_back('_');
    qid += std::to_string(turn);
    return qid;
}

namespace {

std::string session_number(const json& v, const std::string& source)
{
    if (v.is_number_integer()) {
        return std::to_string(v.get<long long>());
    }
    if (v.is_string() && !v.get<std::string>().empty()) {
        return v.get<std::string>();
    }
    throw Error(source + ": session 'number' must be an integer or non-empty string");
}

}  // namespace

std::vector<Session> parse_sessions(std::string_view json_text, const std::string& source)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(source + ": invalid JSON: " + e.what());
    }
    if (!root.is_array()) {
        throw Error(source + ": expected a JSON array of sessions");
    }
    std::vector<Session> sessions;
    std::unordered_set<std::string> seen;
    for (const auto& s : root) {
        if (!s.is_object() || !s.contains("number") || !s.contains("turn") || !s["turn"].is_array()) {
            throw Error(source + ": each session needs 'number' and a 'turn' array");
        }
        Session session;
        session.id = session_number(s["number"], source);
        if (!seen.insert(session.id).second) {
            throw Error(source + ": duplicate session " + session.id);
        }
        for (const auto& t : s["turn"]) {
            if (!t.is_object() || !t.contains("number") || !t["number"].is_number_integer() ||
                !t.contains("raw_utterance") || !t["raw_utterance"].is_string()) {
                throw Error(source + ": session " + session.id +
                            ": each turn needs integer 'number' and string 'raw_utterance'");
            }
            session.turns.push_back(
                {session.id, t["number"].get<int>(), t["raw_utterance"].get<std::string>()});
        }
        std::stable_sort(session.turns.begin(), session.turns.end(),
                         [](const Utterance& a, const Utterance& b) { return a.turn < b.turn; });
        for (std::size_t i = 0; i < session.turns.size(); ++i) {
            if (session.turns[i].turn != static_cast<int>(i) + 1) {
                std::ostringstream msg;
                msg << source << ": session " << session.id
                    << ": turn numbers must be contiguous from 1, found " << session.turns[i].turn
                    << " where " << (i + 1) << " was expected";
                throw Error(msg.str());
            }
        }
        sessions.push_back(std::move(session));
    }
    return sessions;
}

std::vector<Session> load_sessions(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open topic file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_sessions(buf.str(), path.string());
}

}  // namespace convsearch
