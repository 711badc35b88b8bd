// SPDX-License-Identifier: Apache-2.0
#include "episodes/letor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.hpp"

namespace gremetl::episodes {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

std::vector<std::string_view> split_tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i]))
      ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i]))
      ++i;
    if (i > start)
      out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T> bool parse_whole(std::string_view s, T &out) {
  if (s.empty())
    return false;
  const char *first = s.data();
  const char *last = s.data() + s.size();
  if (*first == '+')
    return false;
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

struct RawRecord {
  LetorRecord record;
  std::vector<std::pair<std::size_t, double>> sparse;
};

RawRecord parse_line(std::string_view line, std::size_t lineno,
                     const LetorParseOptions &options) {
  RawRecord raw;
  const std::size_t hash = line.find('#');
  if (hash != std::string_view::npos) {
    raw.record.comment = std::string(line.substr(hash + 1));
    line = line.substr(0, hash);
  }
  const auto tok = split_tokens(line);
  if (tok.empty())
    throw ParseError(lineno, "missing relevance label");
  int rel = 0;
  if (!parse_whole(tok[0], rel) || rel < 0)
    throw ParseError(lineno, "relevance must be a non-negative integer, got '" +
                               std::string(tok[0]) + "'");
  if (options.max_grade && rel > *options.max_grade)
    throw ParseError(lineno, "relevance " + std::to_string(rel) +
                               " exceeds the maximum grade " +
                               std::to_string(*options.max_grade));
  raw.record.relevance = rel;
  if (tok.size() < 2 || tok[1].substr(0, 4) != "qid:")
    throw ParseError(lineno, "expected 'qid:<int>' after the relevance label");
  if (!parse_whole(tok[1].substr(4), raw.record.qid))
    throw ParseError(lineno, "invalid query id '" + std::string(tok[1]) + "'");
  if (tok.size() < 3)
    throw ParseError(lineno, "no features");
  for (std::size_t t = 2; t < tok.size(); ++t) {
    const auto colon = tok[t].find(':');
    if (colon == std::string_view::npos)
      throw ParseError(lineno, "expected '<fid>:<value>', got '" +
                                 std::string(tok[t]) + "'");
    std::size_t fid = 0;
    double v = 0.0;
    if (!parse_whole(tok[t].substr(0, colon), fid) || fid == 0)
      throw ParseError(lineno, "invalid feature id in '" + std::string(tok[t]) + "'");
    if (!parse_whole(tok[t].substr(colon + 1), v))
      throw ParseError(lineno, "invalid feature value in '" + std::string(tok[t]) + "'");
    if (!std::isfinite(v))
      throw ParseError(lineno, "non-finite feature value in '" +
                                 std::string(tok[t]) + "'");
    raw.sparse.emplace_back(fid, v);
  }
  auto sorted = raw.sparse;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].first == sorted[i - 1].first)
      throw ParseError(lineno, "duplicate feature id " +
                                 std::to_string(sorted[i].first));
  return raw;
}

} // namespace

std::vector<LetorRecord> parse_letor(std::istream &in,
                                     const LetorParseOptions &options) {
  std::vector<RawRecord> raws;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v(line);
    if (!v.empty() && v.back() == '\r')
      v.remove_suffix(1);
    if (std::all_of(v.begin(), v.end(), is_space))
      continue;
    RawRecord raw = parse_line(v, lineno, options);
    for (const auto &[fid, val] : raw.sparse)
      width = std::max(width, fid);
    raws.push_back(std::move(raw));
  }
  if (in.bad())
    throw IoError("read error while parsing LETOR input");
  std::vector<LetorRecord> out;
  out.reserve(raws.size());
  for (auto &raw : raws) {
    raw.record.features.assign(width, 0.0);
    for (const auto &[fid, val] : raw.sparse)
      raw.record.features[fid - 1] = val;
    out.push_back(std::move(raw.record));
  }
  return out;
}

std::vector<LetorRecord> parse_letor_text(std::string_view text,
                                          const LetorParseOptions &options) {
  std::istringstream in{std::string(text)};
  return parse_letor(in, options);
}

std::vector<LetorRecord> parse_letor_file(const std::string &path,
                                          const LetorParseOptions &options) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open LETOR file '" + path + "'");
  return parse_letor(in, options);
}

std::string format_letor_value(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc())
    throw UsageError("format_letor_value: formatting failed");
  return std::string(buf, p);
}

std::string serialize_letor(const std::vector<LetorRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    out += std::to_string(r.relevance);
    out += " qid:";
    out += std::to_string(r.qid);
    for (std::size_t i = 0; i < r.features.size(); ++i) {
      out += ' ';
      out += std::to_string(i + 1);
      out += ':';
      out += format_letor_value(r.features[i]);
    }
    if (r.comment) {
      out += " #";
      out += *r.comment;
    }
    out += '\n';
  }
  return out;
}

std::vector<QueryGroup> group_by_query(const std::vector<LetorRecord> &records) {
  std::vector<QueryGroup> groups;
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, fresh] = index.try_emplace(records[i].qid, groups.size());
    if (fresh)
      groups.push_back({records[i].qid, {}});
    groups[it->second].records.push_back(i);
  }
  return groups;
}

std::vector<std::vector<double>>
query_mean_features(const std::vector<LetorRecord> &records,
                    const std::vector<QueryGroup> &groups) {
  std::vector<std::vector<double>> out;
  out.reserve(groups.size());
  for (const auto &g : groups) {
    if (g.records.empty())
      throw UsageError("query " + std::to_string(g.qid) + " has no documents");
    std::vector<double> mean(records.at(g.records.front()).features.size(), 0.0);
    for (std::size_t r : g.records) {
      const auto &f = records.at(r).features;
      if (f.size() != mean.size())
        throw ShapeError("query_mean_features: ragged feature vectors");
      for (std::size_t d = 0; d < f.size(); ++d)
        mean[d] += f[d];
    }
    for (double &v : mean)
      v /= static_cast<double>(g.records.size());
    out.push_back(std::move(mean));
  }
  return out;
}

} // namespace gremetl::episodes
