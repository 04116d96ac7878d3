#include "core/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace farkasnet {

namespace {

std::size_t count_classes(const std::vector<int>& labels) {
  int hi = -1;
  for (int l : labels) {
    if (l < 0) throw InputError("negative label " + std::to_string(l));
    hi = std::max(hi, l);
  }
  return static_cast<std::size_t>(hi + 1);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct IdxHeader {
  std::vector<std::size_t> dims;
  std::size_t payload = 0;  // byte offset of the first element
};

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

IdxHeader parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw FormatError("IDX file shorter than its magic number", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) throw FormatError("bad IDX magic", 0);
  if (bytes[2] != 0x08) throw FormatError("IDX element type is not unsigned byte", 2);
  const std::size_t rank = bytes[3];
  if (rank == 0) throw FormatError("IDX rank is zero", 3);
  IdxHeader h;
  std::size_t at = 4;
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d, at += 4) {
    if (at + 4 > bytes.size()) throw FormatError("IDX header truncated", bytes.size());
    const std::size_t dim = read_be32(bytes, at);
    if (dim == 0) throw FormatError("IDX dimension is zero", at);
    h.dims.push_back(dim);
    count *= dim;
  }
  h.payload = at;
  const std::size_t expected = h.payload + count;
  if (bytes.size() < expected) throw FormatError("IDX payload truncated", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after IDX payload", expected);
  return h;
}

}  // namespace

Dataset gen_two_clusters(std::uint64_t seed, std::size_t n_per_cluster, Point2 center_a, Point2 center_b,
                         double std) {
  if (n_per_cluster == 0) throw InputError("two clusters need at least one point each");
  if (center_a == center_b) throw InputError("cluster centers must differ");
  if (!(std >= 0.0) || !std::isfinite(std)) throw InputError("cluster std must be finite and non-negative");
  Dataset d;
  d.inputs = Tensor({2 * n_per_cluster, 2});
  d.labels.resize(2 * n_per_cluster);
  d.num_classes = 2;
  Rng rng(seed, 0x636c7573);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t k = 0; k < 2; ++k) {
    const Point2& c = k == 0 ? center_a : center_b;
    for (std::size_t i = 0; i < n_per_cluster; ++i) {
      const std::size_t r = k * n_per_cluster + i;
      d.inputs(r, 0) = c[0] + std * noise(rng);
      d.inputs(r, 1) = c[1] + std * noise(rng);
      d.labels[r] = static_cast<int>(k);
    }
  }
  return d;
}

Dataset gen_rings(std::uint64_t seed, std::size_t n_per_ring, std::span<const double> radii, double noise) {
  if (n_per_ring == 0 || radii.size() < 2) throw InputError("rings need two radii and at least one point each");
  if (!(noise >= 0.0)) throw InputError("ring noise must be non-negative");
  Dataset d;
  d.inputs = Tensor({n_per_ring * radii.size(), 2});
  d.labels.resize(n_per_ring * radii.size());
  d.num_classes = radii.size();
  Rng rng(seed, 0x72696e67);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    for (std::size_t i = 0; i < n_per_ring; ++i) {
      const std::size_t r = k * n_per_ring + i;
      const double t = angle(rng);
      const double rad = radii[k] + noise * jitter(rng);
      d.inputs(r, 0) = rad * std::cos(t);
      d.inputs(r, 1) = rad * std::sin(t);
      d.labels[r] = static_cast<int>(k);
    }
  }
  return d;
}

Tensor load_idx_images(const std::string& path) {
  const auto bytes = read_file(path);
  const IdxHeader h = parse_idx(bytes);
  const std::size_t items = h.dims[0];
  std::size_t per_item = 1;
  for (std::size_t d = 1; d < h.dims.size(); ++d) per_item *= h.dims[d];
  Tensor out({items, per_item});
  for (std::size_t i = 0; i < items * per_item; ++i) out[i] = bytes[h.payload + i] / 255.0;
  return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const auto bytes = read_file(path);
  const IdxHeader h = parse_idx(bytes);
  if (h.dims.size() != 1) throw FormatError("IDX label file must have rank 1", 3);
  std::vector<int> labels(h.dims[0]);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = bytes[h.payload + i];
  return labels;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  Dataset d;
  d.inputs = load_idx_images(images_path);
  d.labels = load_idx_labels(labels_path);
  if (d.labels.size() != d.inputs.rows()) {
    throw DimensionError(std::to_string(d.inputs.rows()) + " images but " + std::to_string(d.labels.size()) +
                         " labels");
  }
  d.num_classes = count_classes(d.labels);
  return d;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t offset = 0;
  bool first = true;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<double> fields;
    std::size_t pos = 0;
    bool numeric = true;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      double v = 0.0;
      if (b == std::string::npos) {
        numeric = false;
      } else {
        const char* s = cell.data() + b;
        const char* end = cell.data() + e + 1;
        auto [ptr, ec] = std::from_chars(s, end, v);
        if (ec != std::errc() || ptr != end) numeric = false;
      }
      if (!numeric) {
        if (first && fields.empty()) break;  // header row
        throw FormatError("non-numeric CSV field '" + cell + "'", line_start + pos);
      }
      fields.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!numeric) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() < 2) throw FormatError("CSV row needs a label and at least one feature", line_start);
    if (width == 0) width = fields.size() - 1;
    if (fields.size() - 1 != width) {
      throw FormatError("CSV row has " + std::to_string(fields.size() - 1) + " features, expected " +
                            std::to_string(width),
                        line_start);
    }
    const double label = fields[0];
    if (label < 0 || label != std::floor(label)) {
      throw FormatError("CSV label must be a non-negative integer", line_start);
    }
    labels.push_back(static_cast<int>(label));
    values.insert(values.end(), fields.begin() + 1, fields.end());
  }
  if (labels.empty()) throw InputError("CSV file '" + path + "' has no data rows");
  Dataset d;
  d.inputs = Tensor({labels.size(), width}, std::move(values));
  d.labels = std::move(labels);
  d.num_classes = count_classes(d.labels);
  return d;
}

FeatureStats compute_stats(const Tensor& inputs) {
  const std::size_t n = inputs.rows();
  const std::size_t f = inputs.cols();
  FeatureStats s{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < f; ++c) s.mean[c] += inputs(r, c);
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < f; ++c) s.std[c] += (inputs(r, c) - s.mean[c]) * (inputs(r, c) - s.mean[c]);
  }
  for (auto& v : s.std) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

void apply_stats(Dataset& data, const FeatureStats& stats) {
  if (stats.mean.size() != data.features()) {
    throw DimensionError("statistics for " + std::to_string(stats.mean.size()) + " features, data has " +
                         std::to_string(data.features()));
  }
  for (std::size_t r = 0; r < data.inputs.rows(); ++r) {
    for (std::size_t c = 0; c < data.features(); ++c) {
      data.inputs(r, c) = (data.inputs(r, c) - stats.mean[c]) / stats.std[c];
    }
  }
  data.stats = stats;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("empty subset");
  Dataset out;
  const std::size_t f = data.features();
  out.inputs = Tensor({rows.size(), f});
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = data.inputs.row(rows[i]);
    std::copy(src.begin(), src.end(), out.inputs.data().begin() + static_cast<std::ptrdiff_t>(i * f));
    out.labels.push_back(data.labels[rows[i]]);
  }
  out.num_classes = data.num_classes;
  out.stats = data.stats;
  return out;
}

}  // namespace farkasnet
