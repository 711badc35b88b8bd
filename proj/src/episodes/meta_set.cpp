// SPDX-License-Identifier: Apache-2.0
#include "episodes/meta_set.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "common/error.hpp"
#include "numcore/rng.hpp"

namespace gremetl::episodes {

namespace {

std::map<std::size_t, std::vector<std::size_t>>
units_by_domain(const std::vector<std::size_t> &domain) {
  std::map<std::size_t, std::vector<std::size_t>> by;
  for (std::size_t u = 0; u < domain.size(); ++u)
    by[domain[u]].push_back(u);
  return by;
}

std::vector<std::size_t> take(const std::vector<std::size_t> &src, std::size_t &pos,
                              std::size_t n) {
  std::vector<std::size_t> out(src.begin() + static_cast<std::ptrdiff_t>(pos),
                               src.begin() + static_cast<std::ptrdiff_t>(pos + n));
  pos += n;
  return out;
}

void append(std::vector<std::size_t> &dst, const std::vector<std::size_t> &src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

MetaSet shared_layout(const std::map<std::size_t, std::vector<std::size_t>> &by,
                      const MetaSetOptions &o, num::Rng &rng) {
  const MetaSetCounts &c = o.counts;
  const std::size_t need = o.n_batches * c.train_shots + c.heldout + c.test;
  std::vector<std::size_t> eligible;
  for (const auto &[d, units] : by)
    if (units.size() >= need)
      eligible.push_back(d);
  if (eligible.size() < o.n_domains)
    throw DegenerateDataError(
      "make_meta_set: only " + std::to_string(eligible.size()) +
      " domains have the " + std::to_string(need) + " units required per domain, " +
      std::to_string(o.n_domains) + " needed");
  rng.shuffle(eligible);
  eligible.resize(o.n_domains);

  MetaSet set;
  set.k = c.train_shots;
  set.n = o.n_domains;
  set.train_domains = set.heldout_domains = set.test_domains = eligible;
  set.d_train.assign(o.n_batches, {});
  for (std::size_t d : eligible) {
    std::vector<std::size_t> units = by.at(d);
    rng.shuffle(units);
    std::size_t pos = 0;
    for (auto &batch : set.d_train)
      append(batch, take(units, pos, c.train_shots));
    append(set.d_heldout, take(units, pos, c.heldout));
    append(set.d_test, take(units, pos, c.test));
  }
  return set;
}

std::vector<std::size_t> pooled_draw(const std::map<std::size_t, std::vector<std::size_t>> &by,
                                     const std::vector<std::size_t> &domains,
                                     std::size_t n, const char *what, num::Rng &rng) {
  std::vector<std::size_t> pool;
  for (std::size_t d : domains)
    append(pool, by.at(d));
  if (pool.size() < n)
    throw DegenerateDataError(std::string("make_meta_set: ") + what + " domains hold " +
                              std::to_string(pool.size()) + " units, " +
                              std::to_string(n) + " needed");
  rng.shuffle(pool);
  pool.resize(n);
  return pool;
}

MetaSet disjoint_layout(const std::map<std::size_t, std::vector<std::size_t>> &by,
                        const MetaSetOptions &o, num::Rng &rng) {
  const std::size_t total = o.train_domains + o.heldout_domains + o.test_domains;
  if (by.size() < total)
    throw DegenerateDataError("make_meta_set: " + std::to_string(by.size()) +
                              " domains available, " + std::to_string(total) +
                              " needed for the disjoint layout");
  const MetaSetCounts &c = o.counts;
  const std::size_t need = o.n_batches * c.train_shots;
  std::vector<std::size_t> eligible_train, rest;
  for (const auto &[d, units] : by)
    (units.size() >= need ? eligible_train : rest).push_back(d);
  if (eligible_train.size() < o.train_domains)
    throw DegenerateDataError("make_meta_set: only " +
                              std::to_string(eligible_train.size()) +
                              " domains have the " + std::to_string(need) +
                              " units required for training");
  rng.shuffle(eligible_train);
  MetaSet set;
  set.k = c.train_shots;
  set.n = o.train_domains;
  set.train_domains.assign(eligible_train.begin(),
                           eligible_train.begin() +
                             static_cast<std::ptrdiff_t>(o.train_domains));
  append(rest, std::vector<std::size_t>(eligible_train.begin() +
                                          static_cast<std::ptrdiff_t>(o.train_domains),
                                        eligible_train.end()));
  std::sort(rest.begin(), rest.end());
  rng.shuffle(rest);
  set.heldout_domains.assign(rest.begin(),
                             rest.begin() + static_cast<std::ptrdiff_t>(o.heldout_domains));
  set.test_domains.assign(
    rest.begin() + static_cast<std::ptrdiff_t>(o.heldout_domains),
    rest.begin() + static_cast<std::ptrdiff_t>(o.heldout_domains + o.test_domains));

  set.d_train.assign(o.n_batches, {});
  for (std::size_t d : set.train_domains) {
    std::vector<std::size_t> units = by.at(d);
    rng.shuffle(units);
    std::size_t pos = 0;
    for (auto &batch : set.d_train)
      append(batch, take(units, pos, c.train_shots));
  }
  set.d_heldout = pooled_draw(by, set.heldout_domains, c.heldout, "heldout", rng);
  set.d_test = pooled_draw(by, set.test_domains, c.test, "test", rng);
  return set;
}

std::vector<std::size_t> ids_from(const nlohmann::json &j, const char *key) {
  return j.at(key).get<std::vector<std::size_t>>();
}

} // namespace

void MetaSetOptions::validate() const {
  if (counts.train_shots == 0)
    throw ValidationError("episodes.k", "must be at least 1");
  if (counts.heldout == 0)
    throw ValidationError("episodes.heldout", "must be at least 1");
  if (counts.test == 0)
    throw ValidationError("episodes.test", "must be at least 1");
  if (n_batches == 0)
    throw ValidationError("episodes.n_batches", "must be at least 1");
  if (layout == SplitLayout::SharedDomains && n_domains == 0)
    throw ValidationError("episodes.N", "must be at least 1");
  if (layout == SplitLayout::DisjointDomains &&
      (train_domains == 0 || heldout_domains == 0 || test_domains == 0))
    throw ValidationError("episodes.domain_split", "every domain count must be positive");
}

MetaSet make_meta_set(const std::vector<std::size_t> &domain,
                      const MetaSetOptions &options, std::uint64_t combo_seed) {
  options.validate();
  if (domain.empty())
    throw DegenerateDataError("make_meta_set: no units");
  const auto by = units_by_domain(domain);
  num::Rng rng(combo_seed);
  MetaSet set = options.layout == SplitLayout::SharedDomains
                  ? shared_layout(by, options, rng)
                  : disjoint_layout(by, options, rng);
  set.combo_seed = combo_seed;
  return set;
}

std::vector<MetaSet> make_meta_sets(const std::vector<std::size_t> &domain,
                                    const MetaSetOptions &options,
                                    std::uint64_t seed, std::size_t combos) {
  std::vector<MetaSet> out;
  for (std::size_t c = 0; c < combos; ++c)
    out.push_back(make_meta_set(domain, options, num::derive_seed(seed, {c})));
  return out;
}

MetaSet split_tasks(std::size_t n_tasks, std::size_t n_train, std::size_t n_heldout,
                    std::size_t n_test, std::uint64_t combo_seed) {
  if (n_train == 0 || n_heldout == 0 || n_test == 0)
    throw ValidationError("episodes", "train, heldout and test task counts must be positive");
  if (n_train + n_heldout + n_test > n_tasks)
    throw DegenerateDataError("split_tasks: " + std::to_string(n_tasks) +
                              " tasks cannot fill a " + std::to_string(n_train) + "/" +
                              std::to_string(n_heldout) + "/" +
                              std::to_string(n_test) + " split");
  std::vector<std::size_t> ids(n_tasks);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  num::Rng rng(combo_seed);
  rng.shuffle(ids);
  MetaSet set;
  set.k = 1;
  set.n = 1;
  set.combo_seed = combo_seed;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n_train; ++i)
    set.d_train.push_back(take(ids, pos, 1));
  set.d_heldout = take(ids, pos, n_heldout);
  set.d_test = take(ids, pos, n_test);
  return set;
}

nlohmann::json meta_set_to_json(const MetaSet &set) {
  return {{"format_version", 1},
          {"k", set.k},
          {"N", set.n},
          {"combo_seed", set.combo_seed},
          {"train_domains", set.train_domains},
          {"heldout_domains", set.heldout_domains},
          {"test_domains", set.test_domains},
          {"d_train", set.d_train},
          {"d_heldout", set.d_heldout},
          {"d_test", set.d_test}};
}

MetaSet meta_set_from_json(const nlohmann::json &j) {
  try {
    if (j.at("format_version").get<int>() != 1)
      throw ValidationError("format_version", "unsupported meta-set manifest version");
    MetaSet set;
    set.k = j.at("k").get<std::size_t>();
    set.n = j.at("N").get<std::size_t>();
    set.combo_seed = j.at("combo_seed").get<std::uint64_t>();
    set.train_domains = ids_from(j, "train_domains");
    set.heldout_domains = ids_from(j, "heldout_domains");
    set.test_domains = ids_from(j, "test_domains");
    set.d_train = j.at("d_train").get<std::vector<std::vector<std::size_t>>>();
    set.d_heldout = ids_from(j, "d_heldout");
    set.d_test = ids_from(j, "d_test");
    return set;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("meta_set", e.what());
  }
}

} // namespace gremetl::episodes
