#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "respkit/audio/augment.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/dataset/index.hpp"

namespace respkit::dataset {

/// Augmented entries to add so the minority class reaches at least 90% of the
/// majority count. `warning_no_minority` flags a single-class input, where no
/// plan can help.
struct BalancePlan {
  std::vector<DatasetEntry> additions;
  bool warning_no_minority = false;
};

/// Round-robins over the three augmentation methods and over the minority
/// originals; magnitudes are drawn from a stream seeded only by `seed`, so the
/// plan is a pure function of (index, seed).
inline BalancePlan plan_balance(const DatasetIndex& train, uint64_t seed) {
  size_t n_copd = 0, n_non = 0;
  std::vector<const DatasetEntry*> minority_pool;
  for (const auto& e : train.entries)
    (e.binary_label == BinaryLabel::copd ? n_copd : n_non) += 1;

  BalancePlan plan;
  if (n_copd == n_non) return plan;
  const BinaryLabel minority =
      n_copd < n_non ? BinaryLabel::copd : BinaryLabel::non_copd;
  const size_t majority_count = std::max(n_copd, n_non);
  const size_t minority_count = std::min(n_copd, n_non);

  const size_t floor_count = static_cast<size_t>(
      std::ceil(0.9 * static_cast<double>(majority_count)));
  if (minority_count >= floor_count) return plan;
  const size_t need = floor_count - minority_count;

  for (const auto& e : train.entries)
    if (e.binary_label == minority && e.provenance == Provenance::original)
      minority_pool.push_back(&e);
  if (minority_pool.empty()) {
    plan.warning_no_minority = true;
    return plan;
  }

  Pcg32 rng(seed, 0x62616c);
  std::vector<size_t> per_source_count(minority_pool.size(), 0);
  for (size_t i = 0; i < need; ++i) {
    const DatasetEntry& src = *minority_pool[i % minority_pool.size()];
    audio::AugmentationSpec spec;
    switch (i % 3) {
      case 0:
        spec.method = audio::AugmentMethod::time_shift;
        spec.magnitude = rng.uniform(-2.0, 2.0);
        break;
      case 1:
        spec.method = audio::AugmentMethod::additive_noise;
        spec.magnitude = rng.uniform(10.0, 40.0);
        break;
      default:
        spec.method = audio::AugmentMethod::time_stretch;
        spec.magnitude = rng.uniform(0.8, 1.2);
        break;
    }
    spec.seed = rng.next_u64();

    DatasetEntry add = src;
    size_t& k = per_source_count[i % minority_pool.size()];
    add.id = src.id + "#aug" + std::to_string(k);
    ++k;
    add.provenance = Provenance::augmented;
    add.augmentation = spec;
    plan.additions.push_back(std::move(add));
  }
  return plan;
}

/// Convenience: plan and append in one step.
inline DatasetIndex apply_balance(const DatasetIndex& train, uint64_t seed,
                                  bool* warned = nullptr) {
  const BalancePlan plan = plan_balance(train, seed);
  if (warned) *warned = plan.warning_no_minority;
  DatasetIndex out = train;
  for (const auto& e : plan.additions) out.entries.push_back(e);
  return out;
}

}  // namespace respkit::dataset
