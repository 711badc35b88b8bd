// SPDX-License-Identifier: Apache-2.0
/**
 * @file   letor.hpp
 * @brief  LETOR text format: `<rel> qid:<int> <fid>:<float> ... #comment`.
 *
 * Feature ids start at 1. Records are densified to the largest feature id
 * seen in the whole input; absent ids read as 0.0.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gremetl::episodes {

struct LetorRecord {
  int relevance = 0;
  std::int64_t qid = 0;
  std::vector<double> features;
  std::optional<std::string> comment;
};

struct LetorParseOptions {
  /// Grades above this are rejected when set.
  std::optional<int> max_grade;
};

/// Throws ParseError carrying the 1-based line number of the first bad line.
std::vector<LetorRecord> parse_letor(std::istream &in,
                                     const LetorParseOptions &options = {});
std::vector<LetorRecord> parse_letor_text(std::string_view text,
                                          const LetorParseOptions &options = {});
std::vector<LetorRecord> parse_letor_file(const std::string &path,
                                          const LetorParseOptions &options = {});

/// Canonical form: single spaces, every feature id written, shortest
/// round-trip float text, comment appended after ` #`.
std::string serialize_letor(const std::vector<LetorRecord> &records);
std::string format_letor_value(double v);

struct QueryGroup {
  std::int64_t qid = 0;
  std::vector<std::size_t> records;
};

/// Queries in order of first appearance.
std::vector<QueryGroup> group_by_query(const std::vector<LetorRecord> &records);

/// Mean document feature vector of each query.
std::vector<std::vector<double>>
query_mean_features(const std::vector<LetorRecord> &records,
                    const std::vector<QueryGroup> &groups);

} // namespace gremetl::episodes
