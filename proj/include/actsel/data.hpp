#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "actsel/tensor.hpp"

namespace actsel::data {

// Training and scoring code receives only this view; the noise mask stays on
// the dataset and is read by metrics code alone.
struct ClassView {
  const Tensor* features;
  const std::vector<int>* labels;
  int num_classes;
};

struct PairView {
  const Tensor* view_a;
  const Tensor* view_b;
};

struct LabeledDataset {
  Tensor features;  // n x d
  std::vector<int> labels;
  std::vector<bool> noise_mask;  // label was corrupted
  std::string split_tag = "train";
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  ClassView view() const { return {&features, &labels, num_classes}; }
};

struct PairedDataset {
  Tensor view_a;  // n x d
  Tensor view_b;  // n x d
  std::vector<bool> mismatch_mask;  // pair was shuffled
  Tensor latents;  // n x k shared latents (diagnostics only)
  std::string split_tag = "train";

  std::size_t size() const { return mismatch_mask.size(); }
  PairView view() const { return {&view_a, &view_b}; }
};

// Gaussian class clusters (unit variance, centers >= 4 sigma apart) with a
// noise_rate fraction of labels resampled uniformly among wrong classes.
LabeledDataset gen_classification(std::size_t n, std::size_t d, int k,
                                  double noise_rate, std::uint64_t seed);

// Two noisy linear views of a shared unit-norm latent; mismatch_rate of the
// pairs get their second view shuffled.
PairedDataset gen_paired(std::size_t n, std::size_t d, double mismatch_rate,
                         std::uint64_t seed);

std::pair<LabeledDataset, LabeledDataset> split_holdout(
    const LabeledDataset& dataset, double fraction, std::uint64_t seed);
std::pair<PairedDataset, PairedDataset> split_holdout(
    const PairedDataset& dataset, double fraction, std::uint64_t seed);

// CSV: header row, feature columns then an integer label column.
void save_csv(const LabeledDataset& dataset, const std::string& path);
LabeledDataset load_csv(const std::string& path);

// IDX (big-endian magic): images file 0x00000803, labels file 0x00000801.
struct IdxTensor {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> data;
};
IdxTensor load_idx_tensor(const std::string& path);
LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path);

}  // namespace actsel::data
