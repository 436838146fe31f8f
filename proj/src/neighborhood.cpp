#include "gstrument/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gstrument/errors.hpp"
#include "gstrument/tensor_io.hpp"

namespace gstrument::neighborhood {

FeatureStore::FeatureStore(std::vector<Item> items, std::size_t k) : items_(std::move(items)), k_(k) {
  require(k_ >= 1, "neighborhood size k must be >= 1");
  if (!items_.empty()) dim_ = static_cast<std::size_t>(items_.front().feature.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    require(static_cast<std::size_t>(it.feature.size()) == dim_, "feature dimensions differ within the store");
    require(it.feature.allFinite(), "feature vector has non-finite entries");
    require(it.pitch >= kMinMidi && it.pitch <= kMaxMidi,
            "pitch " + std::to_string(it.pitch) + " outside MIDI 21-108");
    if (!index_.emplace(it.id, i).second) throw InvalidArgument("duplicate id " + std::to_string(it.id));
  }
}

std::size_t FeatureStore::index_of(std::int64_t id) const {
  auto found = index_.find(id);
  if (found == index_.end()) throw NotFound("no item with id " + std::to_string(id));
  return found->second;
}

const Item& FeatureStore::at(std::int64_t id) const { return items_[index_of(id)]; }

Eigen::MatrixXd FeatureStore::feature_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(items_.size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < items_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = items_[i].feature.transpose();
  return m;
}

NeighborSet knn(const FeatureStore& store, std::int64_t query_id) { return knn(store, query_id, store.k()); }

NeighborSet knn(const FeatureStore& store, std::int64_t query_id, std::size_t k) {
  if (store.empty()) throw InvalidState("k-NN query on an empty store");
  require(k >= 1, "k must be >= 1");
  const std::size_t qi = store.index_of(query_id);
  const auto& items = store.items();
  const Eigen::VectorXd& q = items[qi].feature;

  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(items.size() - 1);
  for (std::size_t i = 0; i < items.size(); ++i)
    if (i != qi) cand.emplace_back((items[i].feature - q).squaredNorm(), i);

  const std::size_t take = std::min(k, items.size()) - 1;
  auto less = [&](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : items[a.second].id < items[b.second].id;
  };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), less);

  NeighborSet set;
  set.query_id = query_id;
  set.members.reserve(take + 1);
  set.members.push_back({query_id, 0.0, items[qi].pitch});
  for (std::size_t j = 0; j < take; ++j) {
    const auto& item = items[cand[j].second];
    set.members.push_back({item.id, std::sqrt(cand[j].first), item.pitch});
  }
  return set;
}

std::vector<NeighborSet> all_neighborhoods(const FeatureStore& store) {
  std::vector<NeighborSet> out;
  out.reserve(store.size());
  for (const auto& item : store.items()) out.push_back(knn(store, item.id));
  return out;
}

Neighbor sample_neighbor(const NeighborSet& set, std::mt19937_64& rng) {
  if (set.members.empty()) throw InvalidState("cannot sample from an empty neighbor set");
  std::uniform_int_distribution<std::size_t> pick(0, set.members.size() - 1);
  return set.members[pick(rng)];
}

Neighbor sample_neighbor(const NeighborSet& set, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_neighbor(set, rng);
}

std::vector<std::size_t> mixture_coverage(const FeatureStore& store) {
  if (store.empty()) throw InvalidState("coverage of an empty store");
  std::vector<std::size_t> counts(store.size(), 0);
  for (const auto& item : store.items())
    for (const auto& m : knn(store, item.id).members) ++counts[store.index_of(m.id)];
  return counts;
}

void save_store(const FeatureStore& store, const std::filesystem::path& features,
                const std::filesystem::path& labels_csv) {
  write_gstm(features, to_tensor(store.feature_matrix()));
  std::ostringstream csv;
  csv << "id,pitch,instrument_id,category\n";
  for (const auto& it : store.items())
    csv << it.id << ',' << it.pitch << ',' << it.instrument_id << ',' << it.category << '\n';
  write_file_atomic(labels_csv, csv.str());
}

FeatureStore load_store(const std::filesystem::path& features, const std::filesystem::path& labels_csv,
                        std::size_t k) {
  const Eigen::MatrixXd m = to_matrix(read_gstm(features));
  std::ifstream f(labels_csv);
  if (!f) throw IoError("cannot open " + labels_csv.string());
  std::string line;
  std::getline(f, line);
  if (line != "id,pitch,instrument_id,category") throw IoError("unexpected label CSV header in " + labels_csv.string());
  std::vector<Item> items;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Item it;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> it.id >> c1 >> it.pitch >> c2 >> it.instrument_id >> c3 >> it.category) || c1 != ',' ||
        c2 != ',' || c3 != ',')
      throw IoError("malformed label row: " + line);
    items.push_back(std::move(it));
  }
  if (static_cast<Eigen::Index>(items.size()) != m.rows())
    throw IoError("label count does not match feature rows");
  for (std::size_t i = 0; i < items.size(); ++i) items[i].feature = m.row(static_cast<Eigen::Index>(i)).transpose();
  return FeatureStore(std::move(items), k);
}

}  // namespace gstrument::neighborhood
