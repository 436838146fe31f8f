#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace gstrument::neighborhood {

inline constexpr int kMinMidi = 21;
inline constexpr int kMaxMidi = 108;
inline constexpr std::size_t kDefaultK = 50;

struct Item {
  std::int64_t id = 0;
  Eigen::VectorXd feature;
  int pitch = 60;  // MIDI note
  int instrument_id = 0;
  int category = 0;
};

/// Immutable set of labelled feature vectors with exact L2 neighborhoods.
class FeatureStore {
 public:
  /// Validates unique ids, a common finite dimension and MIDI range.
  explicit FeatureStore(std::vector<Item> items, std::size_t k = kDefaultK);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t dim() const { return dim_; }
  std::size_t k() const { return k_; }
  const std::vector<Item>& items() const { return items_; }
  const Item& at(std::int64_t id) const;
  std::size_t index_of(std::int64_t id) const;

  /// Features as an n x d matrix (row i = item i).
  Eigen::MatrixXd feature_matrix() const;

 private:
  std::vector<Item> items_;
  std::unordered_map<std::int64_t, std::size_t> index_;
  std::size_t dim_ = 0;
  std::size_t k_ = kDefaultK;
};

struct Neighbor {
  std::int64_t id = 0;
  double distance = 0.0;
  int pitch = 0;
};

/// A_i: the query followed by its nearest neighbors.
struct NeighborSet {
  std::int64_t query_id = 0;
  std::vector<Neighbor> members;
};

/// Exact brute-force k-NN under Euclidean distance. The query is always the
/// first member (distance 0); the rest are ordered by (distance, id).
/// Returns min(k, size) members. Throws NotFound for an unknown id.
NeighborSet knn(const FeatureStore& store, std::int64_t query_id);
NeighborSet knn(const FeatureStore& store, std::int64_t query_id, std::size_t k);

/// All neighbor sets, in store order.
std::vector<NeighborSet> all_neighborhoods(const FeatureStore& store);

/// Uniform draw from A_i. Throws InvalidState on an empty set.
Neighbor sample_neighbor(const NeighborSet& set, std::mt19937_64& rng);
Neighbor sample_neighbor(const NeighborSet& set, std::uint64_t seed);

/// For each item (store order), how many neighbor sets contain it.
std::vector<std::size_t> mixture_coverage(const FeatureStore& store);

/// GSTM feature matrix plus a sidecar CSV "id,pitch,instrument_id,category".
void save_store(const FeatureStore& store, const std::filesystem::path& features,
                const std::filesystem::path& labels_csv);
FeatureStore load_store(const std::filesystem::path& features, const std::filesystem::path& labels_csv,
                        std::size_t k = kDefaultK);

}  // namespace gstrument::neighborhood
