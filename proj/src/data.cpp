#include "actsel/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "actsel/rng.hpp"

namespace actsel::data {

namespace {

// Shuffle indices with our own RNG so splits are platform-stable.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

std::vector<std::vector<double>> sample_separated_centers(std::size_t d, int k,
                                                          Rng& rng) {
  const double sigma_c = std::sqrt(16.0 / static_cast<double>(d));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(k));
    for (auto& c : centers) {
      c.resize(d);
      for (double& v : c) v = sigma_c * rng.next_normal();
    }
    double min_dist = 1e300;
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = centers[a][j] - centers[b][j];
          sq += diff * diff;
        }
        min_dist = std::min(min_dist, std::sqrt(sq));
      }
    if (min_dist >= 3.5) return centers;
  }
  throw ConfigError("gen_classification: could not separate class centers");
}

}  // namespace

LabeledDataset gen_classification(std::size_t n, std::size_t d, int k,
                                  double noise_rate, std::uint64_t seed) {
  if (k < 2) throw ConfigError("gen_classification: need K >= 2");
  if (noise_rate < 0.0 || noise_rate >= 1.0)
    throw ConfigError("gen_classification: noise_rate must be in [0,1)");
  Rng rng(Rng::derive(seed, 0xDA7A));
  const auto centers = sample_separated_centers(d, k, rng);

  LabeledDataset ds;
  ds.num_classes = k;
  ds.features = Tensor::matrix(n, d);
  ds.labels.resize(n);
  ds.noise_mask.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const int true_label = static_cast<int>(rng.next_below(k));
    for (std::size_t j = 0; j < d; ++j)
      ds.features.at(i, j) = centers[true_label][j] + rng.next_normal();
    int label = true_label;
    if (noise_rate > 0.0 && rng.next_double() < noise_rate) {
      label = static_cast<int>(rng.next_below(k - 1));
      if (label >= true_label) ++label;
      ds.noise_mask[i] = true;
    }
    ds.labels[i] = label;
  }
  return ds;
}

PairedDataset gen_paired(std::size_t n, std::size_t d, double mismatch_rate,
                         std::uint64_t seed) {
  if (mismatch_rate < 0.0 || mismatch_rate >= 1.0)
    throw ConfigError("gen_paired: mismatch_rate must be in [0,1)");
  Rng rng(Rng::derive(seed, 0xBEEF));
  const std::size_t latent_dim = std::max<std::size_t>(4, d / 4);
  // fixed mixing matrices per seed
  Tensor mix_a = Tensor::matrix(latent_dim, d);
  Tensor mix_b = Tensor::matrix(latent_dim, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  for (double& v : mix_a.data) v = scale * rng.next_normal();
  for (double& v : mix_b.data) v = scale * rng.next_normal();

  PairedDataset ds;
  ds.view_a = Tensor::matrix(n, d);
  ds.view_b = Tensor::matrix(n, d);
  ds.latents = Tensor::matrix(n, latent_dim);
  ds.mismatch_mask.assign(n, false);
  const double view_noise = 0.1;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < latent_dim; ++j) {
      ds.latents.at(i, j) = rng.next_normal();
      sq += ds.latents.at(i, j) * ds.latents.at(i, j);
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < latent_dim; ++j) ds.latents.at(i, j) *= inv;
    for (std::size_t c = 0; c < d; ++c) {
      double va = 0.0, vb = 0.0;
      for (std::size_t j = 0; j < latent_dim; ++j) {
        va += ds.latents.at(i, j) * mix_a.at(j, c);
        vb += ds.latents.at(i, j) * mix_b.at(j, c);
      }
      ds.view_a.at(i, c) = va + view_noise * rng.next_normal();
      ds.view_b.at(i, c) = vb + view_noise * rng.next_normal();
    }
  }
  if (mismatch_rate > 0.0) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.next_double() < mismatch_rate) {
        bad.push_back(i);
        ds.mismatch_mask[i] = true;
      }
    // rotate the second views among the mismatched pairs
    if (bad.size() >= 2) {
      std::vector<double> first(ds.view_b.row(bad[0]),
                                ds.view_b.row(bad[0]) + d);
      for (std::size_t j = 0; j + 1 < bad.size(); ++j)
        std::copy(ds.view_b.row(bad[j + 1]), ds.view_b.row(bad[j + 1]) + d,
                  ds.view_b.row(bad[j]));
      std::copy(first.begin(), first.end(), ds.view_b.row(bad.back()));
    }
  }
  return ds;
}

std::pair<LabeledDataset, LabeledDataset> split_holdout(
    const LabeledDataset& dataset, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ConfigError("split_holdout: fraction must be in (0,1)");
  Rng rng(Rng::derive(seed, 0x5B117));
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);

  std::vector<std::size_t> train_idx, hold_idx;
  for (auto& idx : by_class) {
    shuffle_indices(idx, rng);
    const auto n_hold = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < idx.size(); ++j)
      (j < n_hold ? hold_idx : train_idx).push_back(idx[j]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());

  auto take = [&](const std::vector<std::size_t>& idx, const std::string& tag) {
    LabeledDataset out;
    out.num_classes = dataset.num_classes;
    out.split_tag = tag;
    const std::size_t d = dataset.features.cols();
    out.features = Tensor::matrix(idx.size(), d);
    out.labels.resize(idx.size());
    out.noise_mask.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      std::copy(dataset.features.row(idx[j]), dataset.features.row(idx[j]) + d,
                out.features.row(j));
      out.labels[j] = dataset.labels[idx[j]];
      out.noise_mask[j] = dataset.noise_mask[idx[j]];
    }
    return out;
  };
  return {take(train_idx, "train"), take(hold_idx, "holdout")};
}

std::pair<PairedDataset, PairedDataset> split_holdout(
    const PairedDataset& dataset, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ConfigError("split_holdout: fraction must be in (0,1)");
  Rng rng(Rng::derive(seed, 0x5B117));
  std::vector<std::size_t> idx(dataset.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  shuffle_indices(idx, rng);
  const auto n_hold = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(idx.size())));
  std::vector<std::size_t> hold_idx(idx.begin(), idx.begin() + n_hold);
  std::vector<std::size_t> train_idx(idx.begin() + n_hold, idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());

  auto take = [&](const std::vector<std::size_t>& sel, const std::string& tag) {
    PairedDataset out;
    out.split_tag = tag;
    const std::size_t d = dataset.view_a.cols();
    const std::size_t k = dataset.latents.cols();
    out.view_a = Tensor::matrix(sel.size(), d);
    out.view_b = Tensor::matrix(sel.size(), d);
    out.latents = Tensor::matrix(sel.size(), k);
    out.mismatch_mask.resize(sel.size());
    for (std::size_t j = 0; j < sel.size(); ++j) {
      std::copy(dataset.view_a.row(sel[j]), dataset.view_a.row(sel[j]) + d,
                out.view_a.row(j));
      std::copy(dataset.view_b.row(sel[j]), dataset.view_b.row(sel[j]) + d,
                out.view_b.row(j));
      std::copy(dataset.latents.row(sel[j]), dataset.latents.row(sel[j]) + k,
                out.latents.row(j));
      out.mismatch_mask[j] = dataset.mismatch_mask[sel[j]];
    }
    return out;
  };
  return {take(train_idx, "train"), take(hold_idx, "holdout")};
}

void save_csv(const LabeledDataset& dataset, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("save_csv: cannot open " + path);
  const std::size_t d = dataset.features.cols();
  for (std::size_t j = 0; j < d; ++j) f << "f" << j << ",";
  f << "label\n";
  f.precision(17);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) f << dataset.features.at(i, j) << ",";
    f << dataset.labels[i] << "\n";
  }
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line))
    throw ConfigError("load_csv: " + path + ": missing header row");
  std::size_t n_cols = std::count(line.begin(), line.end(), ',') + 1;
  if (n_cols < 2 || line.substr(line.rfind(',') + 1) != "label")
    throw ConfigError("load_csv: " + path + ": malformed header");
  const std::size_t d = n_cols - 1;

  std::vector<double> feats;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != n_cols)
      throw ConfigError("load_csv: " + path + ": ragged row at line " +
                        std::to_string(line_no));
    try {
      for (std::size_t j = 0; j < d; ++j) feats.push_back(std::stod(cells[j]));
      labels.push_back(std::stoi(cells[d]));
    } catch (const std::exception&) {
      throw ConfigError("load_csv: " + path + ": bad value at line " +
                        std::to_string(line_no));
    }
  }
  LabeledDataset ds;
  ds.features = Tensor({labels.size(), d});
  ds.features.data = std::move(feats);
  ds.labels = std::move(labels);
  ds.noise_mask.assign(ds.labels.size(), false);
  int max_label = 0;
  for (int l : ds.labels) {
    if (l < 0)
      throw ConfigError("load_csv: " + path + ": label out of range");
    max_label = std::max(max_label, l);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

namespace {
std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
  std::uint8_t buf[4];
  if (!f.read(reinterpret_cast<char*>(buf), 4))
    throw ConfigError("load_idx: " + path + ": truncated file");
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}
}  // namespace

IdxTensor load_idx_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("load_idx: cannot open " + path);
  const std::uint32_t magic = read_be32(f, path);
  if ((magic & 0xFFFFFF00u) != 0x00000800u)
    throw ConfigError("load_idx: " + path + ": bad magic number");
  if (((magic >> 8) & 0xFF) != 0x08)
    throw ConfigError("load_idx: " + path + ": only u8 data supported");
  const std::size_t ndim = magic & 0xFF;
  IdxTensor t;
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    t.dims.push_back(read_be32(f, path));
    total *= t.dims.back();
  }
  t.data.resize(total);
  if (!f.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(total)))
    throw ConfigError("load_idx: " + path + ": truncated data");
  return t;
}

LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  IdxTensor images = load_idx_tensor(images_path);
  IdxTensor labels = load_idx_tensor(labels_path);
  if (images.dims.empty() || labels.dims.size() != 1)
    throw ConfigError("load_idx: unexpected tensor ranks");
  const std::size_t n = images.dims[0];
  if (labels.dims[0] != n)
    throw ConfigError("load_idx: image/label counts differ");
  std::size_t d = 1;
  for (std::size_t i = 1; i < images.dims.size(); ++i) d *= images.dims[i];
  LabeledDataset ds;
  ds.features = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n * d; ++i)
    ds.features.data[i] = static_cast<double>(images.data[i]) / 255.0;
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = labels.data[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  ds.noise_mask.assign(n, false);
  return ds;
}

}  // namespace actsel::data
