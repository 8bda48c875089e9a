#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/dataset/index.hpp"

namespace respkit::dataset {

enum class SplitStrategy : uint8_t { recording_level = 0, patient_grouped = 1 };

struct SplitResult {
  DatasetIndex train;
  DatasetIndex test;
};

namespace detail {

inline double copd_fraction(const std::vector<const DatasetEntry*>& v) {
  if (v.empty()) return 0.0;
  size_t n = 0;
  for (const auto* e : v)
    if (e->binary_label == BinaryLabel::copd) ++n;
  return static_cast<double>(n) / static_cast<double>(v.size());
}

// Largest-remainder apportionment of `total` across class quotas.
inline std::vector<size_t> apportion(const std::vector<double>& quotas, size_t total) {
  const size_t k = quotas.size();
  std::vector<size_t> alloc(k);
  std::vector<std::pair<double, size_t>> rem(k);
  size_t assigned = 0;
  for (size_t i = 0; i < k; ++i) {
    alloc[i] = static_cast<size_t>(std::floor(quotas[i]));
    assigned += alloc[i];
    rem[i] = {quotas[i] - std::floor(quotas[i]), i};
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (size_t i = 0; assigned < total && i < k; ++i, ++assigned) ++alloc[rem[i].second];
  return alloc;
}

}  // namespace detail

/// Stratified train/test split over original entries. Augmented entries are
/// always placed on the train side; in patient_grouped mode every patient's
/// recordings stay together (patients owning augmented entries are forced to
/// train).
inline SplitResult split_train_test(const DatasetIndex& index, double test_fraction,
                                    uint64_t seed, SplitStrategy strategy) {
  require(!index.entries.empty(), errc::empty_dataset, "cannot split an empty index");
  require(test_fraction > 0.0 && test_fraction < 1.0, errc::invalid_spec,
          "test fraction must lie in (0, 1)");

  std::vector<const DatasetEntry*> originals;
  std::vector<const DatasetEntry*> augmented;
  for (const auto& e : index.entries)
    (e.provenance == Provenance::original ? originals : augmented).push_back(&e);
  require(!originals.empty(), errc::too_few_entries, "index has no original entries");

  const size_t n = originals.size();
  const size_t test_total = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  require(test_total >= 1 && test_total < n, errc::too_few_entries,
          "test fraction leaves an empty split");
  const double global_copd = detail::copd_fraction(originals);
  // A test slice with t slots can only realize fractions on a 1/t grid, so
  // the stratification tolerance widens to that granularity on small corpora.
  const double tolerance =
      std::max(0.05, 1.5 / static_cast<double>(test_total)) + 1e-9;

  SplitResult result;
  auto commit = [&](const std::vector<const DatasetEntry*>& test_side,
                    const std::vector<const DatasetEntry*>& train_side) {
    for (const auto* e : train_side) result.train.entries.push_back(*e);
    for (const auto* e : augmented) result.train.entries.push_back(*e);
    for (const auto* e : test_side) result.test.entries.push_back(*e);
  };

  if (strategy == SplitStrategy::recording_level) {
    // shuffle within each class, then apportion test slots per class by
    // largest remainder so the copd fraction carries over
    std::vector<const DatasetEntry*> classes[2];
    for (const auto* e : originals)
      classes[e->binary_label == BinaryLabel::copd ? 1 : 0].push_back(e);

    Pcg32 rng(seed, 0x73706c69);
    std::vector<double> quotas;
    for (auto& cls : classes) {
      rng.shuffle(cls);
      quotas.push_back(test_fraction * static_cast<double>(cls.size()));
    }
    std::vector<size_t> alloc = detail::apportion(quotas, test_total);
    for (int c = 0; c < 2; ++c) alloc[c] = std::min(alloc[c], classes[c].size());

    std::vector<const DatasetEntry*> test_side, train_side;
    for (int c = 0; c < 2; ++c) {
      for (size_t i = 0; i < classes[c].size(); ++i)
        (i < alloc[static_cast<size_t>(c)] ? test_side : train_side).push_back(classes[c][i]);
    }
    const double got = detail::copd_fraction(test_side);
    require(std::abs(got - global_copd) <= tolerance, errc::too_few_entries,
            "stratification impossible at this size");
    commit(test_side, train_side);
    return result;
  }

  // patient_grouped: assign whole patients to the test side until the target
  // size is reached; retry with fresh shuffles until stratification holds
  std::set<uint32_t> forced_train;
  for (const auto* e : augmented) forced_train.insert(e->meta.patient_id);

  std::map<uint32_t, std::vector<const DatasetEntry*>> by_patient;
  for (const auto* e : originals) by_patient[e->meta.patient_id].push_back(e);
  std::vector<uint32_t> patients;
  for (const auto& kv : by_patient)
    if (!forced_train.count(kv.first)) patients.push_back(kv.first);
  require(!patients.empty(), errc::too_few_entries, "no patients eligible for the test side");

  for (uint32_t attempt = 0; attempt < 20; ++attempt) {
    Pcg32 rng(seed + attempt, 0x73706c69);
    std::vector<uint32_t> order = patients;
    rng.shuffle(order);

    std::vector<const DatasetEntry*> test_side, train_side;
    size_t taken = 0;
    std::set<uint32_t> test_patients;
    for (uint32_t pid : order) {
      if (taken >= test_total) break;
      test_patients.insert(pid);
      taken += by_patient[pid].size();
    }
    for (const auto* e : originals)
      (test_patients.count(e->meta.patient_id) ? test_side : train_side).push_back(e);

    if (test_side.empty() || train_side.empty()) continue;
    if (std::abs(detail::copd_fraction(test_side) - global_copd) > tolerance) continue;
    commit(test_side, train_side);
    return result;
  }
  raise(errc::too_few_entries,
        "could not build a stratified patient-grouped split in 20 attempts");
}

struct Fold {
  DatasetIndex train;
  DatasetIndex validation;
};

/// k-fold partition: seeded shuffle then contiguous slices, so validation
/// sets are disjoint, exhaustive, and sized within one of each other.
inline std::vector<Fold> make_folds(const DatasetIndex& train, size_t k, uint64_t seed) {
  require(k >= 2, errc::invalid_k, "k-fold requires k >= 2");
  const size_t n = train.entries.size();
  require(n >= k, errc::too_few_entries, "need at least k entries for k folds");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Pcg32 rng(seed, 0x666f6c64);
  rng.shuffle(order);

  std::vector<Fold> folds(k);
  const size_t base = n / k, extra = n % k;
  size_t pos = 0;
  for (size_t f = 0; f < k; ++f) {
    const size_t len = base + (f < extra ? 1 : 0);
    for (size_t i = 0; i < n; ++i) {
      const DatasetEntry& e = train.entries[order[i]];
      if (i >= pos && i < pos + len) folds[f].validation.entries.push_back(e);
      else folds[f].train.entries.push_back(e);
    }
    pos += len;
  }
  return folds;
}

}  // namespace respkit::dataset
