// SPDX-License-Identifier: Apache-2.0
/**
 * @file   meta_set.hpp
 * @brief  Static few-shot splits over labelled units (records or queries).
 *
 * Two layouts are supported:
 *  - shared domains: N domains are drawn and every split samples from the
 *    same N domains (k per domain in each D_train, `heldout` and `test`
 *    units per domain);
 *  - disjoint domains: training, heldout and test units come from disjoint
 *    domain sets (e.g. 5 / 2 / 3 domains), with `heldout` and `test` units
 *    in total.
 * All draws are without replacement and fixed for the whole run.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace gremetl::episodes {

struct MetaSetCounts {
  std::size_t train_shots = 5;
  std::size_t heldout = 15;
  std::size_t test = 15;
};

enum class SplitLayout { SharedDomains, DisjointDomains };

struct MetaSetOptions {
  SplitLayout layout = SplitLayout::SharedDomains;
  /// Domains per episode (shared layout).
  std::size_t n_domains = 3;
  /// Domain counts of the disjoint layout.
  std::size_t train_domains = 5;
  std::size_t heldout_domains = 2;
  std::size_t test_domains = 3;
  std::size_t n_batches = 4;
  MetaSetCounts counts;

  void validate() const;
};

struct MetaSet {
  std::vector<std::vector<std::size_t>> d_train;
  std::vector<std::size_t> d_heldout;
  std::vector<std::size_t> d_test;
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<std::size_t> train_domains;
  std::vector<std::size_t> heldout_domains;
  std::vector<std::size_t> test_domains;
  std::uint64_t combo_seed = 0;
};

/// `domain[u]` is the domain of unit u. Throws DegenerateDataError when a
/// selected domain lacks units.
MetaSet make_meta_set(const std::vector<std::size_t> &domain,
                      const MetaSetOptions &options, std::uint64_t combo_seed);

/// One meta-set per combination; combination c uses derive_seed(seed, {c}).
std::vector<MetaSet> make_meta_sets(const std::vector<std::size_t> &domain,
                                    const MetaSetOptions &options,
                                    std::uint64_t seed, std::size_t combos);

nlohmann::json meta_set_to_json(const MetaSet &set);
MetaSet meta_set_from_json(const nlohmann::json &j);

/// Task-level split used by the quadratic family: one task per D_train.
MetaSet split_tasks(std::size_t n_tasks, std::size_t n_train, std::size_t n_heldout,
                    std::size_t n_test, std::uint64_t combo_seed);

} // namespace gremetl::episodes
